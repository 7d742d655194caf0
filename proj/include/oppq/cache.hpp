#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "oppq/basis.hpp"
#include "oppq/errors.hpp"
#include "oppq/indexing.hpp"
#include "oppq/mer.hpp"
#include "oppq/real.hpp"
#include "oppq/serialize.hpp"
#include "oppq/version.hpp"
#include "oppq/weight.hpp"

namespace oppq {

struct CacheEntryInfo {
    std::string file;
    std::string kind;  // "basis" or "coeff"
    std::string signature;
    int digits = 0;
    std::uintmax_t bytes = 0;
};

namespace detail {

inline void write_vec_rows(std::ostream& out, const std::vector<Vec>& rows) {
    out << rows.size() << "\n";
    for (const Vec& row : rows) {
        out << row.size();
        for (const Real& v : row) out << " " << to_exact_string(v);
        out << "\n";
    }
}

inline std::vector<Vec> read_vec_rows(LineReader& rd, const std::string& header_key) {
    const size_t count = std::stoul(rd.expect(header_key));
    std::vector<Vec> rows(count);
    std::string line;
    for (size_t i = 0; i < count; ++i) {
        if (!rd.next(line)) throw IoError("truncated row table");
        std::istringstream ss(line);
        size_t width = 0;
        if (!(ss >> width)) throw IoError("bad row header");
        Vec row(width);
        std::string tok;
        for (size_t j = 0; j < width; ++j) {
            if (!(ss >> tok)) throw IoError("short row");
            row[j] = parse_real(tok);
        }
        if (ss >> tok) throw IoError("overlong row");
        rows[i] = std::move(row);
    }
    return rows;
}

inline std::string basis_payload(const BasisTable& b) {
    std::ostringstream out;
    out << "basis\n";
    out << "signature " << b.signature() << "\n";
    out << "digits " << b.digits << "\n";
    out << "dimension " << b.dimension << "\n";
    out << "n_max " << b.n_max << "\n";
    out << "max_degree " << b.max_degree << "\n";
    out << "weight.kind "
        << (b.weight.kind == WeightSpec::Kind::HermiteHalfline ? "hermite_halfline" : "qzm_exp")
        << "\n";
    if (b.weight.kind == WeightSpec::Kind::QzmExp) {
        out << "weight.field " << to_exact_string(b.weight.field) << "\n";
        out << "weight.eps0 " << to_exact_string(b.weight.eps0) << "\n";
    }
    if (b.dimension == 1) {
        out << "moments1d " << b.moments1d.size() << "\n";
        for (const Real& v : b.moments1d) out << to_exact_string(v) << "\n";
    } else {
        out << "moments2d " << b.moments2d.rows() << " " << b.moments2d.cols() << "\n";
        for (long i = 0; i < b.moments2d.rows(); ++i)
            for (long j = 0; j < b.moments2d.cols(); ++j)
                out << to_exact_string(b.moments2d(i, j)) << "\n";
    }
    out << "xi ";
    write_vec_rows(out, b.xi);
    return out.str();
}

inline void rebuild_gram(BasisTable& b) {
    if (b.dimension == 1) {
        b.gram = Mat(b.n_max + 1, b.n_max + 1);
        for (long i = 0; i <= b.n_max; ++i)
            for (long j = 0; j <= b.n_max; ++j)
                b.gram(i, j) = b.moments1d[static_cast<size_t>(i + j)];
    } else {
        const long count = b.n_max + 1;
        b.gram = Mat(count, count);
        for (long i = 0; i < count; ++i) {
            const Monomial2D mi = monomial_at(i);
            for (long j = i; j < count; ++j) {
                const Monomial2D mj = monomial_at(j);
                const Real& v = b.moments2d(mi.m + mj.m, mi.n + mj.n);
                b.gram(i, j) = v;
                b.gram(j, i) = v;
            }
        }
    }
}

inline BasisTable parse_basis_payload(const std::string& payload) {
    LineReader rd(payload);
    rd.expect("basis");
    BasisTable b;
    const std::string sig = rd.expect("signature");
    b.digits = std::stoi(rd.expect("digits"));
    if (b.digits < static_cast<int>(kMinDigits)) throw IoError("stored precision too low");
    PrecisionScope scope(static_cast<unsigned>(b.digits));
    b.dimension = std::stoi(rd.expect("dimension"));
    b.n_max = std::stol(rd.expect("n_max"));
    b.max_degree = std::stol(rd.expect("max_degree"));
    const std::string kind = rd.expect("weight.kind");
    if (kind == "hermite_halfline") {
        b.weight.kind = WeightSpec::Kind::HermiteHalfline;
    } else if (kind == "qzm_exp") {
        b.weight.kind = WeightSpec::Kind::QzmExp;
        b.weight.field = parse_real(rd.expect("weight.field"));
        b.weight.eps0 = parse_real(rd.expect("weight.eps0"));
    } else {
        throw IoError("unknown weight kind '" + kind + "'");
    }
    if (b.dimension == 1) {
        const size_t count = std::stoul(rd.expect("moments1d"));
        if (count != static_cast<size_t>(2 * b.n_max + 1)) throw IoError("moment count mismatch");
        b.moments1d.resize(count);
        std::string line;
        for (size_t i = 0; i < count; ++i) {
            if (!rd.next(line)) throw IoError("truncated moment list");
            b.moments1d[i] = parse_real(line);
        }
    } else if (b.dimension == 2) {
        std::istringstream hdr(rd.expect("moments2d"));
        long rows = 0, cols = 0;
        hdr >> rows >> cols;
        if (rows <= 0 || cols <= 0) throw IoError("bad moment rectangle header");
        b.moments2d = Mat(rows, cols);
        std::string line;
        for (long i = 0; i < rows; ++i)
            for (long j = 0; j < cols; ++j) {
                if (!rd.next(line)) throw IoError("truncated moment rectangle");
                b.moments2d(i, j) = parse_real(line);
            }
    } else {
        throw IoError("bad dimension");
    }
    b.xi = read_vec_rows(rd, "xi");
    if (b.xi.size() != static_cast<size_t>(b.n_max + 1)) throw IoError("polynomial count mismatch");
    for (size_t i = 0; i < b.xi.size(); ++i)
        if (b.xi[i].size() != i + 1) throw IoError("ragged polynomial table shape");
    if (b.signature() != sig) throw IoError("signature does not match stored fields");
    rebuild_gram(b);
    return b;
}

inline std::string coeff_payload(const std::string& key, const CoeffTable& t, int digits) {
    std::ostringstream out;
    out << "coeff\n";
    out << "signature " << key << "\n";
    out << "digits " << digits << "\n";
    out << "dimension " << t.dimension << "\n";
    out << "energy " << to_exact_string(t.energy) << "\n";
    out << "missing_order " << t.missing_order << "\n";
    out << "max_index " << t.max_index << "\n";
    out << "has_derivative " << (t.has_derivative ? 1 : 0) << "\n";
    out << "values ";
    write_vec_rows(out, t.values);
    out << "dvalues ";
    write_vec_rows(out, t.dvalues);
    return out.str();
}

inline CoeffTable parse_coeff_payload(const std::string& payload, std::string* key_out = nullptr) {
    LineReader rd(payload);
    rd.expect("coeff");
    const std::string key = rd.expect("signature");
    if (key_out) *key_out = key;
    const int digits = std::stoi(rd.expect("digits"));
    if (digits < static_cast<int>(kMinDigits)) throw IoError("stored precision too low");
    PrecisionScope scope(static_cast<unsigned>(digits));
    CoeffTable t;
    t.dimension = std::stoi(rd.expect("dimension"));
    t.energy = parse_real(rd.expect("energy"));
    t.missing_order = std::stol(rd.expect("missing_order"));
    t.max_index = std::stol(rd.expect("max_index"));
    t.has_derivative = rd.expect("has_derivative") == "1";
    t.values = read_vec_rows(rd, "values");
    t.dvalues = read_vec_rows(rd, "dvalues");
    if (t.dimension == 2) t.pairs.emplace(t.max_index);
    const size_t want_rows = t.dimension == 1 ? static_cast<size_t>(t.max_index + 1)
                                              : static_cast<size_t>(t.pairs->size());
    if (t.values.size() != want_rows) throw IoError("moment row count mismatch");
    if (t.has_derivative && t.dvalues.size() != want_rows)
        throw IoError("derivative row count mismatch");
    for (const Vec& row : t.values)
        if (row.size() != static_cast<size_t>(t.width())) throw IoError("moment row width mismatch");
    return t;
}

}  // namespace detail

/// Directory of reusable basis and moment tables.  Entries are text files
/// with a format tag and a payload checksum; anything failing either check
/// is dropped with a warning rather than trusted.
class Cache {
  public:
    explicit Cache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create cache directory " + dir_.string());
    }

    const std::filesystem::path& dir() const { return dir_; }
    const std::vector<std::string>& warnings() const { return warnings_; }
    void clear_warnings() { warnings_.clear(); }

    void put_basis(const BasisTable& b) { store(b.signature(), detail::basis_payload(b)); }

    /// Exact-signature hit, else the smallest compatible superset entry
    /// (same weight and digits, order/degree at least as large).
    std::optional<BasisTable> get_basis(const WeightSpec& weight, long n_max, long max_degree,
                                        int digits) {
        BasisTable probe;
        probe.weight = weight;
        probe.digits = digits;
        probe.n_max = n_max;
        probe.max_degree = max_degree;
        probe.dimension = weight.kind == WeightSpec::Kind::HermiteHalfline ? 1 : 2;
        if (auto payload = checked_payload(dir_ / file_name(probe.signature()))) {
            if (auto hit = parse_basis(*payload, dir_ / file_name(probe.signature())))
                if (compatible(*hit, probe)) return hit;
        }
        std::optional<BasisTable> best;
        for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
            if (entry.path().extension() != ".oppq") continue;
            auto payload = checked_payload(entry.path());
            if (!payload || payload->rfind("basis\n", 0) != 0) continue;
            auto cand = parse_basis(*payload, entry.path());
            if (!cand || !compatible(*cand, probe)) continue;
            if (!best || cand->n_max < best->n_max) best = std::move(cand);
        }
        return best;
    }

    void put_coeff(const std::string& key, const CoeffTable& t, int digits) {
        store(key, detail::coeff_payload(key, t, digits));
    }

    std::optional<CoeffTable> get_coeff(const std::string& key) {
        const auto path = dir_ / file_name(key);
        auto payload = checked_payload(path);
        if (!payload || payload->rfind("coeff\n", 0) != 0) return std::nullopt;
        try {
            std::string stored_key;
            CoeffTable t = detail::parse_coeff_payload(*payload, &stored_key);
            if (stored_key != key) throw IoError("key mismatch");
            return t;
        } catch (const std::exception& e) {
            drop(path, e.what());
            return std::nullopt;
        }
    }

    std::vector<CacheEntryInfo> status() {
        std::vector<CacheEntryInfo> out;
        for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
            if (entry.path().extension() != ".oppq") continue;
            auto payload = checked_payload(entry.path());
            if (!payload) continue;
            try {
                LineReader rd(*payload);
                CacheEntryInfo info;
                std::string kind;
                if (!rd.next(kind) || (kind != "basis" && kind != "coeff"))
                    throw IoError("unknown entry kind");
                info.kind = kind;
                info.signature = rd.expect("signature");
                info.digits = std::stoi(rd.expect("digits"));
                info.file = entry.path().filename().string();
                info.bytes = std::filesystem::file_size(entry.path());
                out.push_back(std::move(info));
            } catch (const std::exception& e) {
                drop(entry.path(), e.what());
            }
        }
        std::sort(out.begin(), out.end(),
                  [](const CacheEntryInfo& a, const CacheEntryInfo& b) { return a.file < b.file; });
        return out;
    }

    int purge() {
        int removed = 0;
        for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
            if (entry.path().extension() != ".oppq") continue;
            std::error_code ec;
            if (std::filesystem::remove(entry.path(), ec)) ++removed;
        }
        return removed;
    }

    /// Deep check: parse each entry and, for basis entries, recompute the
    /// polynomial table from the stored moments at the stored precision.
    std::vector<std::pair<std::string, bool>> verify() {
        std::vector<std::pair<std::string, bool>> out;
        for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
            if (entry.path().extension() != ".oppq") continue;
            const std::string name = entry.path().filename().string();
            bool ok = false;
            try {
                LineReader rd(read_file(entry.path()));
                std::string line;
                if (!rd.next(line) || line != kCacheFormat) throw IoError("format tag");
                const std::string stored = rd.expect("checksum");
                const std::string payload = rd.rest();
                if (stored != hex16(fnv1a64(payload))) throw IoError("checksum");
                if (payload.rfind("basis\n", 0) == 0) {
                    const BasisTable b = detail::parse_basis_payload(payload);
                    PrecisionScope scope(static_cast<unsigned>(b.digits));
                    const Mat chol = cholesky_lower(b.gram);
                    const auto xi = detail::xi_from_cholesky(chol);
                    const Real tol = residual_tolerance();
                    ok = true;
                    for (long i : {0L, b.n_max / 2, b.n_max}) {
                        const auto& got = b.xi[static_cast<size_t>(i)];
                        const auto& want = xi[static_cast<size_t>(i)];
                        for (size_t j = 0; j < want.size(); ++j)
                            if (abs(got[j] - want[j]) > tol * (1 + abs(want[j]))) ok = false;
                    }
                } else {
                    detail::parse_coeff_payload(payload);
                    ok = true;
                }
            } catch (const std::exception&) {
                ok = false;
            }
            out.emplace_back(name, ok);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

  private:
    static std::string file_name(const std::string& signature) {
        return hex16(fnv1a64(signature)) + ".oppq";
    }

    static bool compatible(const BasisTable& have, const BasisTable& want) {
        if (have.dimension != want.dimension || have.digits != want.digits) return false;
        if (have.weight.kind != want.weight.kind) return false;
        if (have.weight.kind == WeightSpec::Kind::QzmExp &&
            (have.weight.field != want.weight.field || have.weight.eps0 != want.weight.eps0))
            return false;
        return have.n_max >= want.n_max && have.max_degree >= want.max_degree;
    }

    void store(const std::string& signature, const std::string& payload) {
        std::string content = std::string(kCacheFormat) + "\n";
        content += "checksum " + hex16(fnv1a64(payload)) + "\n";
        content += payload;
        write_file_atomic(dir_ / file_name(signature), content);
    }

    void drop(const std::filesystem::path& path, const std::string& why) {
        warnings_.push_back("dropping cache entry " + path.filename().string() + ": " + why);
        std::error_code ec;
        std::filesystem::remove(path, ec);
    }

    /// Format + checksum validation; corrupt entries are dropped.
    std::optional<std::string> checked_payload(const std::filesystem::path& path) {
        std::error_code ec;
        if (!std::filesystem::exists(path, ec)) return std::nullopt;
        try {
            LineReader rd(read_file(path));
            std::string line;
            if (!rd.next(line) || line != kCacheFormat) throw IoError("unknown cache format tag");
            const std::string stored = rd.expect("checksum");
            std::string payload = rd.rest();
            if (stored != hex16(fnv1a64(payload))) throw IoError("checksum mismatch");
            return payload;
        } catch (const std::exception& e) {
            drop(path, e.what());
            return std::nullopt;
        }
    }

    std::optional<BasisTable> parse_basis(const std::string& payload,
                                          const std::filesystem::path& path) {
        try {
            return detail::parse_basis_payload(payload);
        } catch (const std::exception& e) {
            drop(path, e.what());
            return std::nullopt;
        }
    }

    std::filesystem::path dir_;
    std::vector<std::string> warnings_;
};

}  // namespace oppq
