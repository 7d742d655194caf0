#include "catch_amalgamated.hpp"

#include <filesystem>

#include "oppq/config.hpp"
#include "oppq/real.hpp"
#include "oppq/serialize.hpp"

using namespace oppq;

TEST_CASE("precision scope sets and restores the working precision") {
    PrecisionScope outer(40);
    REQUIRE(session_digits() == 40);
    {
        PrecisionScope inner(77);
        REQUIRE(session_digits() == 77);
    }
    REQUIRE(session_digits() == 40);
    REQUIRE_THROWS_AS(PrecisionScope(10), ConfigError);
}

TEST_CASE("decimal serialization round-trips bit-exactly") {
    PrecisionScope scope(60);
    const char* seeds[] = {"1", "-3.5", "0.1", "12345.678901234567890123456789",
                           "9.999999999999999e-7"};
    for (const char* s : seeds) {
        Real x = parse_real(s);
        x = x * x * 3 - x / 7 + sqrt(abs(x));
        const std::string text = to_exact_string(x);
        const Real back = parse_real(text);
        REQUIRE(back == x);
        REQUIRE(to_exact_string(back) == text);
    }
    REQUIRE(to_exact_string(Real(0)) == to_exact_string(parse_real(to_exact_string(Real(0)))));
}

TEST_CASE("parse_real rejects junk") {
    PrecisionScope scope(40);
    REQUIRE_THROWS_AS(parse_real(""), ConfigError);
    REQUIRE_THROWS_AS(parse_real("abc"), ConfigError);
    REQUIRE_THROWS_AS(parse_real("1.2.3"), ConfigError);
    REQUIRE_THROWS_AS(parse_real("1 2"), ConfigError);
    REQUIRE(parse_real("-1.5e2") == Real(-150));
}

TEST_CASE("residual tolerance leaves ten guard digits") {
    PrecisionScope scope(40);
    const Real tol = residual_tolerance();
    REQUIRE(tol == pow(Real(10), -30));
}

TEST_CASE("shared constants") {
    PrecisionScope scope(50);
    const Real two_pi = 2 * boost::math::constants::pi<Real>();
    REQUIRE(abs(sqrt_two_pi() - sqrt(two_pi)) < pow(Real(10), -45));
    REQUIRE(factorial(0) == 1);
    REQUIRE(factorial(5) == 120);
    REQUIRE(factorial(20) == Real("2432902008176640000"));
}

TEST_CASE("fnv1a64 matches published vectors") {
    REQUIRE(fnv1a64("") == 0xcbf29ce484222325ull);
    REQUIRE(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    REQUIRE(hex16(0xcbf29ce484222325ull) == "cbf29ce484222325");
    REQUIRE(hex16(0x1ull) == "0000000000000001");
}

TEST_CASE("line reader walks keyed lines") {
    LineReader rd("alpha 1\nbeta two words\nrest of it");
    REQUIRE(rd.expect("alpha") == "1");
    REQUIRE(rd.expect("beta") == "two words");
    REQUIRE(rd.rest() == "rest of it");
    LineReader bad("gamma 3\n");
    REQUIRE_THROWS_AS(bad.expect("delta"), IoError);
}

TEST_CASE("atomic file write round trip") {
    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() / "oppq_test_serialize";
    std::filesystem::create_directories(dir);
    const std::filesystem::path f = dir / "x.txt";
    write_file_atomic(f, "hello\nworld\n");
    REQUIRE(read_file(f) == "hello\nworld\n");
    write_file_atomic(f, "second");
    REQUIRE(read_file(f) == "second");
    std::filesystem::remove_all(dir);
}

TEST_CASE("config text parsing") {
    const ConfigMap m = parse_config_text(
        "# comment\n"
        "problem = quartic\n"
        "digits=150\n"
        "param.B = 2  # trailing comment\n"
        "window = -4:-3\n"
        "digits = 151\n");
    REQUIRE(m.at("problem") == "quartic");
    REQUIRE(m.at("digits") == "151");  // later key wins
    REQUIRE(m.at("param.B") == "2");
    REQUIRE(m.at("window") == "-4:-3");
    REQUIRE_THROWS_AS(parse_config_text("no equals sign\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("bad key! = 3\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("empty =\n"), ConfigError);

    const ConfigMap merged = merge_config(m, {{"digits", "60"}});
    REQUIRE(merged.at("digits") == "60");
    REQUIRE(canonical_config({{"b", "2"}, {"a", "1"}}) == "a=1\nb=2\n");
}
