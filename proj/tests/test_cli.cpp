#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path& scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("dfock_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    static const struct Cleanup {
        ~Cleanup() {
            std::error_code ec;
            fs::remove_all(dir, ec);
        }
    } cleanup;
    return dir;
}

// Runs the CLI with stdout to `out` and stderr to `err` inside the scratch dir.
int run(const std::string& args, const std::string& out = "out.txt", const std::string& err = "err.txt") {
    const std::string cmd = "cd '" + scratch().string() + "' && '" DFOCK_BINARY "' " + args + " > '" + out +
                            "' 2> '" + err + "'";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& name) {
    std::ifstream f(scratch() / name, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("usage errors exit with 2", "[cli]") {
    CHECK(run("") == 2);
    CHECK(run("figure") == 2);
    CHECK(run("figure 9") == 2);
    CHECK(run("figure 0") == 2);
    CHECK(run("figure 1 --mode fast") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("sweep --label 0.8 --range 0:1:1 --fixed 0 --observable q") == 2);
    CHECK(run("sweep --label 0.8 --range 1:0:5 --fixed 0 --observable q") == 2);
    CHECK(run("sweep --label 0.8 --range 0:1:5 --fixed 0 --observable nope") == 2);
    CHECK(run("sweep --label x --range 0:1:5 --fixed 0 --observable q") == 2);
    CHECK(run("validate --suite algebra --grid 0:1:3") == 2);
    CHECK(slurp("err.txt").find("usage error") != std::string::npos);
    CHECK(run("--help") == 0);
}

TEST_CASE("out-of-domain squeezing label exits with 3", "[cli]") {
    CHECK(run("sweep --kind ss --label 1.2 --range 0:1:3 --fixed 0 --observable dx2") == 3);
    CHECK(slurp("err.txt").find("numerical error") != std::string::npos);
}

TEST_CASE("validate exit codes and report", "[cli]") {
    CHECK(run("validate --suite algebra --grid=-1e-9:1e-9:2,-1e-9:1e-9:2") == 0);
    const auto j = nlohmann::json::parse(slurp("out.txt"));
    CHECK(j["suite"] == "algebra");
    CHECK(j["passed"] == true);
    CHECK(j["checks"].size() > 0);
    CHECK(slurp("err.txt").find("0 failed") != std::string::npos);

    CHECK(run("validate --suite states --grid 0:0.5:2,0:0.5:2 --alpha 0.8 --eta 1.2 --out report.json") == 1);
    const auto r = nlohmann::json::parse(slurp("report.json"));
    CHECK(r["passed"] == false);
    bool saw_domain = false;
    for (const auto& c : r["checks"]) {
        if (c.contains("error") && c["error"].get<std::string>().rfind("domain error", 0) == 0) saw_domain = true;
    }
    CHECK(saw_domain);
}

TEST_CASE("figure runs are byte-identical", "[cli]") {
    REQUIRE(run("figure 7 --steps 41", "a.csv") == 0);
    REQUIRE(run("--threads 4 figure 7 --steps 41", "b.csv") == 0);
    REQUIRE(run("figure 7 --steps 41 --out c.csv", "empty.txt") == 0);
    const std::string a = slurp("a.csv");
    CHECK(a.rfind("figure_id,mode,state_kind,", 0) == 0);
    CHECK(std::count(a.begin(), a.end(), '\n') == 1 + 41 * 4);
    CHECK(a == slurp("b.csv"));
    CHECK(a == slurp("c.csv"));
    CHECK(slurp("empty.txt").empty());
}

TEST_CASE("sweep with JSON output and negative range", "[cli]") {
    REQUIRE(run("sweep --kind cs --label 0.5,0.5 --axis l2 --range=-2:2:5 --fixed 0.1,0.2 --observable Q "
                "--mode exact --format json") == 0);
    const auto j = nlohmann::json::parse(slurp("out.txt"));
    REQUIRE(j["rows"].size() == 10);
    CHECK(j["rows"][0]["sweep_param_value"] == -2.0);
    CHECK(j["rows"][0]["state_label_im"] == 0.5);
    CHECK(j["rows"][0]["mode"] == "EXACT");
    CHECK(j["rows"][0]["figure_id"] == "custom");
}

TEST_CASE("config file mirrors flags and flags win", "[cli]") {
    {
        std::ofstream cfg(scratch() / "run.ini");
        cfg << "threads=2\n[figure]\nid=2\nsteps=3\nmode=exact\n";
    }
    REQUIRE(run("--config run.ini figure", "cfg.csv") == 0);
    const std::string from_cfg = slurp("cfg.csv");
    CHECK(std::count(from_cfg.begin(), from_cfg.end(), '\n') == 1 + 3 * 4);
    CHECK(from_cfg.find(",EXACT,") != std::string::npos);
    CHECK(from_cfg.find(",dp2,") != std::string::npos);

    REQUIRE(run("--config run.ini figure --steps 5 --mode diagonal", "cfg2.csv") == 0);
    const std::string overridden = slurp("cfg2.csv");
    CHECK(std::count(overridden.begin(), overridden.end(), '\n') == 1 + 5 * 4);
    CHECK(overridden.find(",BASIS_DIAGONAL,") != std::string::npos);

    CHECK(run("--config missing.ini figure 1") == 2);
}
