#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string output;
};

Run cli(const std::string& args, const fs::path& dir) {
    const fs::path log = dir / "cli.log";
    const std::string cmd = std::string(CNC_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("cnc_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

const std::string kSmall = "--series 20 --k-true 4 --lag 3 --period 6 --length 150";

}  // namespace

TEST_CASE("simulate is reproducible") {
    const fs::path dir = scratch("simulate");
    REQUIRE(cli("simulate " + kSmall + " --out " + (dir / "a").string(), dir).code == 0);
    REQUIRE(cli("simulate " + kSmall + " --out " + (dir / "b").string(), dir).code == 0);
    CHECK(slurp(dir / "a" / "data.csv") == slurp(dir / "b" / "data.csv"));
    CHECK(slurp(dir / "a" / "truth.json") == slurp(dir / "b" / "truth.json"));
    CHECK(fs::exists(dir / "a" / "manifest.jsonl"));
}

TEST_CASE("fit then forecast is deterministic") {
    const fs::path dir = scratch("fit");
    REQUIRE(cli("simulate " + kSmall + " --out " + dir.string(), dir).code == 0);
    const std::string data = (dir / "data.csv").string();
    for (const char* sub : {"r1", "r2"}) {
        const fs::path out = dir / sub;
        REQUIRE(cli("fit --data " + data + " --lags 1:3 --k 4 --out " + out.string(), dir).code == 0);
        REQUIRE(cli("forecast --data " + data + " --model " + (out / "model.ccfm").string() +
                        " --horizon 5 --out " + out.string(),
                    dir)
                    .code == 0);
    }
    CHECK(slurp(dir / "r1" / "model.ccfm") == slurp(dir / "r2" / "model.ccfm"));
    CHECK(slurp(dir / "r1" / "forecast.csv") == slurp(dir / "r2" / "forecast.csv"));
    CHECK(slurp(dir / "r1" / "forecast.csv").rfind("series_id,h1,h2,h3,h4,h5\n", 0) == 0);
}

TEST_CASE("usage errors exit with status 2") {
    const fs::path dir = scratch("usage");
    CHECK(cli("", dir).code == 2);
    CHECK(cli("simulate --series 20 --k-true 7 --out " + dir.string(), dir).code == 2);
    CHECK(cli("verify-theory --trials 0 --out " + dir.string(), dir).code == 2);
    CHECK(cli("simulate --no-such-flag", dir).code == 2);
}

TEST_CASE("a missing model names the path") {
    const fs::path dir = scratch("missing");
    REQUIRE(cli("simulate " + kSmall + " --out " + dir.string(), dir).code == 0);
    const std::string bogus = (dir / "nope.ccfm").string();
    const Run r = cli("forecast --data " + (dir / "data.csv").string() + " --model " + bogus + " --out " + dir.string(),
                      dir);
    CHECK(r.code == 1);
    CHECK(r.output.find(bogus) != std::string::npos);
}

TEST_CASE("command-line flags override the config file") {
    const fs::path dir = scratch("config");
    {
        std::ofstream cfg(dir / "run.ini");
        cfg << "series=20\nk-true=4\nlag=3\nlength=120\nperiod=6\nseed=1\n";
    }
    const std::string cfg = " --config " + (dir / "run.ini").string();
    REQUIRE(cli("simulate" + cfg + " --out " + (dir / "file").string(), dir).code == 0);
    REQUIRE(cli("simulate" + cfg + " --seed 2 --out " + (dir / "flag").string(), dir).code == 0);
    REQUIRE(cli("simulate --series 20 --k-true 4 --lag 3 --length 120 --period 6 --seed 1 --out " +
                    (dir / "plain").string(),
                dir)
                .code == 0);
    CHECK(slurp(dir / "file" / "data.csv") == slurp(dir / "plain" / "data.csv"));
    CHECK(slurp(dir / "file" / "data.csv") != slurp(dir / "flag" / "data.csv"));
}
