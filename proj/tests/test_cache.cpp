#include "catch_amalgamated.hpp"

#include <filesystem>
#include <string>

#include "oppq/basis.hpp"
#include "oppq/cache.hpp"
#include "oppq/indexing.hpp"
#include "oppq/problems.hpp"
#include "oppq/real.hpp"
#include "oppq/serialize.hpp"
#include "oppq/version.hpp"

using namespace oppq;
namespace fs = std::filesystem;

namespace {

struct ScratchDir {
    fs::path path;
    explicit ScratchDir(const std::string& name) : path(fs::path("cache_scratch") / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~ScratchDir() { fs::remove_all(path); }
};

fs::path only_entry(const fs::path& dir) {
    fs::path found;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".oppq") {
            REQUIRE(found.empty());
            found = e.path();
        }
    REQUIRE_FALSE(found.empty());
    return found;
}

bool same_table(const BasisTable& a, const BasisTable& b) {
    if (a.signature() != b.signature()) return false;
    if (a.xi.size() != b.xi.size()) return false;
    for (size_t i = 0; i < a.xi.size(); ++i)
        for (size_t j = 0; j < a.xi[i].size(); ++j)
            if (a.xi[i][j] != b.xi[i][j]) return false;
    if (a.gram.rows() != b.gram.rows()) return false;
    for (long i = 0; i < a.gram.rows(); ++i)
        for (long j = 0; j < a.gram.cols(); ++j)
            if (a.gram(i, j) != b.gram(i, j)) return false;
    return true;
}

}  // namespace

TEST_CASE("basis tables survive a store/load cycle bit for bit") {
    PrecisionScope scope(50);
    ScratchDir dir("basis_roundtrip");
    const ProblemSpec h = register_problem(HarmonicSpec{}.spec());
    const BasisTable built = build_problem_basis(h, 8);
    {
        Cache cache(dir.path);
        cache.put_basis(built);
    }
    Cache fresh(dir.path);
    auto hit = fresh.get_basis(built.weight, 8, built.max_degree, 50);
    REQUIRE(hit.has_value());
    REQUIRE(same_table(*hit, built));
    REQUIRE(fresh.warnings().empty());

    // The 2D variant also restores the moment rectangle and gram.
    const ProblemSpec q = register_problem(QzmSpec{Real(2), Real(1)}.spec());
    const BasisTable built2 = build_problem_basis(q, order_cap(1));
    Cache c2(dir.path);
    c2.put_basis(built2);
    auto hit2 = c2.get_basis(built2.weight, order_cap(1), built2.max_degree, 50);
    REQUIRE(hit2.has_value());
    REQUIRE(same_table(*hit2, built2));
}

TEST_CASE("lookups prefer exact entries and fall back to the smallest superset") {
    PrecisionScope scope(50);
    ScratchDir dir("basis_superset");
    const ProblemSpec h = register_problem(HarmonicSpec{}.spec());
    Cache cache(dir.path);
    const BasisTable b10 = build_problem_basis(h, 10);
    const BasisTable b14 = build_problem_basis(h, 14);
    cache.put_basis(b10);
    cache.put_basis(b14);

    auto small = cache.get_basis(b10.weight, 8, 8, 50);  // no exact entry
    REQUIRE(small.has_value());
    REQUIRE(small->n_max == 10);  // nearest superset wins

    const BasisTable b8 = build_problem_basis(h, 8);
    cache.put_basis(b8);
    auto exact = cache.get_basis(b8.weight, 8, 8, 50);
    REQUIRE(exact.has_value());
    REQUIRE(exact->n_max == 8);  // exact hit beats the supersets

    REQUIRE_FALSE(cache.get_basis(b10.weight, 8, 8, 60).has_value());   // precision mismatch
    REQUIRE_FALSE(cache.get_basis(b10.weight, 20, 20, 50).has_value()); // nothing big enough

    WeightSpec other;
    other.kind = WeightSpec::Kind::QzmExp;
    other.field = Real(2);
    other.eps0 = Real(1);
    REQUIRE_FALSE(cache.get_basis(other, 2, 3, 50).has_value());  // weight mismatch
}

TEST_CASE("moment tables round-trip with derivatives and 2D shapes intact") {
    PrecisionScope scope(50);
    ScratchDir dir("coeff_roundtrip");
    Cache cache(dir.path);

    const ProblemSpec q = register_problem(QuarticSpec{}.spec());
    const CoeffTable t = build_coeff_table(q, parse_real("0.7"), 6, true);
    cache.put_coeff("quartic-e0.7-n6", t, 50);
    auto back = cache.get_coeff("quartic-e0.7-n6");
    REQUIRE(back.has_value());
    REQUIRE(back->dimension == 1);
    REQUIRE(back->has_derivative);
    REQUIRE(back->energy == t.energy);
    for (long j = 0; j <= 6; ++j)
        for (long l = 0; l < t.width(); ++l) {
            REQUIRE(back->m(j, l) == t.m(j, l));
            REQUIRE(back->dm(j, l) == t.dm(j, l));
        }

    const ProblemSpec z = register_problem(QzmSpec{Real(2), Real(1)}.spec());
    const CoeffTable t2 = build_coeff_table(z, parse_real("1.05"), 3, false);
    cache.put_coeff("qzm-b2-e1.05-d3", t2, 50);
    auto back2 = cache.get_coeff("qzm-b2-e1.05-d3");
    REQUIRE(back2.has_value());
    REQUIRE(back2->dimension == 2);
    for (long m = 0; m <= 1; ++m)
        for (long n = m; n <= 3 - m; ++n)
            for (long l = 0; l < t2.width(); ++l) REQUIRE(back2->m2(m, n, l) == t2.m2(m, n, l));

    REQUIRE_FALSE(cache.get_coeff("never-stored").has_value());
}

TEST_CASE("flipped payload bytes are detected, warned about, and evicted") {
    PrecisionScope scope(50);
    ScratchDir dir("corruption");
    const ProblemSpec h = register_problem(HarmonicSpec{}.spec());
    const BasisTable b = build_problem_basis(h, 6);
    Cache cache(dir.path);
    cache.put_basis(b);

    const fs::path file = only_entry(dir.path);
    std::string content = read_file(file);
    const size_t pos = content.rfind('7');
    REQUIRE(pos != std::string::npos);
    content[pos] = '8';
    write_file_atomic(file, content);

    Cache reopened(dir.path);
    REQUIRE_FALSE(reopened.get_basis(b.weight, 6, b.max_degree, 50).has_value());
    REQUIRE_FALSE(reopened.warnings().empty());
    REQUIRE(reopened.warnings()[0].find("checksum") != std::string::npos);
    REQUIRE_FALSE(fs::exists(file));  // evicted, not retried forever
}

TEST_CASE("unknown format tags are rejected without a crash") {
    PrecisionScope scope(50);
    ScratchDir dir("format_tag");
    Cache cache(dir.path);
    write_file_atomic(dir.path / "bogus1234567890a.oppq", "other-tool-v9\njunk\n");
    REQUIRE(cache.status().empty());
    REQUIRE_FALSE(cache.warnings().empty());
}

TEST_CASE("status lists entries, clear removes them") {
    PrecisionScope scope(50);
    ScratchDir dir("status");
    const ProblemSpec h = register_problem(HarmonicSpec{}.spec());
    Cache cache(dir.path);
    cache.put_basis(build_problem_basis(h, 5));
    cache.put_coeff("k1", build_coeff_table(h, Real(1), 5, false), 50);

    const auto entries = cache.status();
    REQUIRE(entries.size() == 2);
    int basis_count = 0, coeff_count = 0;
    for (const auto& e : entries) {
        REQUIRE(e.digits == 50);
        REQUIRE(e.bytes > 0);
        if (e.kind == "basis") ++basis_count;
        if (e.kind == "coeff") ++coeff_count;
    }
    REQUIRE(basis_count == 1);
    REQUIRE(coeff_count == 1);
    REQUIRE(entries[0].file <= entries[1].file);  // deterministic listing order

    REQUIRE(cache.purge() == 2);
    REQUIRE(cache.status().empty());
}

TEST_CASE("deep verification recomputes stored polynomial tables") {
    PrecisionScope scope(50);
    ScratchDir dir("verify");
    const ProblemSpec h = register_problem(HarmonicSpec{}.spec());
    Cache cache(dir.path);
    cache.put_basis(build_problem_basis(h, 6));
    cache.put_coeff("k1", build_coeff_table(h, Real(1), 4, false), 50);

    for (const auto& [file, ok] : cache.verify()) REQUIRE(ok);

    // Tamper with one stored polynomial coefficient and fix the checksum so
    // only the deep recomputation can notice.
    fs::path victim;
    for (const auto& e : fs::directory_iterator(dir.path)) {
        const std::string text = read_file(e.path());
        if (text.find("\nbasis\n") == std::string::npos &&
            text.find("basis\n") == std::string::npos)
            continue;
        if (text.find("xi ") != std::string::npos) victim = e.path();
    }
    REQUIRE_FALSE(victim.empty());
    std::string content = read_file(victim);
    const size_t xi_pos = content.find("xi ");
    size_t digit = content.find('7', xi_pos);
    REQUIRE(digit != std::string::npos);
    content[digit] = '8';
    // rebuild "checksum <hex>" over the payload (everything after that line)
    const size_t ck_pos = content.find("checksum ");
    const size_t payload_pos = content.find('\n', ck_pos) + 1;
    const std::string payload = content.substr(payload_pos);
    content = content.substr(0, ck_pos) + "checksum " + hex16(fnv1a64(payload)) + "\n" + payload;
    write_file_atomic(victim, content);

    Cache reopened(dir.path);
    bool saw_bad = false;
    for (const auto& [file, ok] : reopened.verify())
        if (!ok) saw_bad = true;
    REQUIRE(saw_bad);
}
