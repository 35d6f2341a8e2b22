#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "maguq/config.hpp"
#include "maguq/csv.hpp"

using namespace maguq;
using Catch::Approx;

TEST_CASE("defaults reproduce the reference settings", "[config]") {
    const cli::RunConfig c;
    CHECK(c.n_min == 256);
    CHECK(c.eta == 1.0);
    CHECK(c.epsilon == 0.01);
    CHECK(c.threshold == 0.95);
    CHECK(c.degree == 2);
    CHECK(c.nu_mean == Approx(795.774));
    CHECK(c.n_turns == 260);
    CHECK(c.nu_air == Approx(1.0 / (4.0e-7 * 3.14159265358979323846)).epsilon(1e-12));
}

TEST_CASE("config text parsing", "[config]") {
    const auto c = cli::parse_config_text(
        "# comment line\n"
        "kernel.sigma = 10\n"
        "kernel.d = 0.2,1,5  # sweep\n"
        "mesh.target_h=0.004\n"
        "\n"
        "seed = 7\n");
    CHECK(c.sigma == 10.0);
    REQUIRE(c.d_sweep.size() == 3);
    CHECK(c.d_sweep[1] == 1.0);
    CHECK(c.geometry.target_h == 0.004);
    CHECK(c.seed == 7);

    SECTION("unknown keys are rejected with the line number") {
        REQUIRE_THROWS_WITH(cli::parse_config_text("bogus.key = 1\n"),
                            Catch::Matchers::ContainsSubstring("unknown key"));
        REQUIRE_THROWS_WITH(cli::parse_config_text("\n\nbogus.key = 1\n"),
                            Catch::Matchers::ContainsSubstring("line 3"));
    }
    SECTION("malformed numbers are rejected") {
        REQUIRE_THROWS_AS(cli::parse_config_text("kernel.sigma = ten\n"), ConfigError);
    }
}

TEST_CASE("serialize/parse round trip is idempotent", "[config]") {
    const auto base = cli::parse_config_text(
        "kernel.sigma = 2.5\n"
        "kernel.d = 0.30000000000000004,7\n"
        "materials.nu_mean = 795.774\n"
        "uq.degree = 3\n"
        "sample.xi = 0.5,-0.25\n");
    const std::string once = cli::serialize(base);
    const std::string twice = cli::serialize(cli::parse_config_text(once));
    CHECK(once == twice);

    const auto dir = std::filesystem::temp_directory_path() / "maguq_config_tests";
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "a.cfg");
        out << once;
    }
    const auto reparsed = cli::parse_config_file((dir / "a.cfg").string());
    CHECK(cli::serialize(reparsed) == once);
}

TEST_CASE("cli overrides apply after the file", "[config]") {
    auto c = cli::parse_config_text("kernel.sigma = 1\n");
    cli::apply_setting(c, "kernel.sigma=3");
    cli::apply_setting(c, "hmatrix.n_min = 128");
    CHECK(c.sigma == 3.0);
    CHECK(c.n_min == 128);
    REQUIRE_THROWS_AS(cli::apply_setting(c, "no-equals-sign"), ConfigError);
}

TEST_CASE("config echo is a single line covering every key", "[config]") {
    const cli::RunConfig c;
    const std::string echo = cli::config_echo(c);
    CHECK(echo.find('\n') == std::string::npos);
    CHECK(echo.find("hmatrix.epsilon=0.01") != std::string::npos);
    CHECK(echo.find("kle.threshold=0.95") != std::string::npos);
}

TEST_CASE("value tags are filename safe", "[config]") {
    CHECK(cli::value_tag(0.2) == "0p2");
    CHECK(cli::value_tag(10.0) == "10");
    CHECK(cli::value_tag(-1.5) == "m1p5");
}
