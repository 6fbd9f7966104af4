// End-to-end checks of the ksparse executable: exit codes, output files,
// replay determinism.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string cli = KSPARSE_CLI_PATH;

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "ksparse_cli_tests";
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args) {
    const std::string command = cli + " " + args + " >/dev/null 2>&1";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream file(path, std::ios::binary);
    std::stringstream buffer;
    buffer << file.rdbuf();
    return buffer.str();
}

json load_json(const fs::path& path) { return json::parse(slurp(path)); }

}  // namespace

TEST_CASE("synth then solve then cv round trip") {
    const fs::path dir = work_dir() / "roundtrip";
    fs::remove_all(dir);
    REQUIRE(run("synth --n 16 --alpha 0.75 --rho0 0.15 --seed 9 --out-dir " + dir.string()) == 0);
    REQUIRE(fs::exists(dir / "instance.csv"));
    const json truth = load_json(dir / "truth.json");
    CHECK(truth["m"] == 12);
    CHECK(truth["params"]["n"] == 16);

    REQUIRE(run("solve --input " + (dir / "instance.csv").string() +
                " --k 2 --seed 3 --restarts 2 --out-dir " + (dir / "sol").string()) == 0);
    const json solution = load_json(dir / "sol" / "solution.json");
    CHECK(solution["result"]["best_support"].size() == 2);
    CHECK(solution["result"]["rss"].get<double>() >= 0.0);
    CHECK(solution["result"]["restarts"].size() == 2);
    CHECK(fs::exists(dir / "sol" / "trace.csv"));
    const std::string trace = slurp(dir / "sol" / "trace.csv");
    CHECK(trace.rfind("beta,temperature,eps\n", 0) == 0);

    REQUIRE(run("cv --input " + (dir / "instance.csv").string() +
                " --k-set 1:3 --folds k:4 --seed 5 --out-dir " + (dir / "cv").string()) == 0);
    const json report = load_json(dir / "cv" / "cv_report.json");
    CHECK(report["report"]["k_values"] == json::array({1, 2, 3}));
    const std::string looe = slurp(dir / "cv" / "looe.csv");
    CHECK(looe.rfind("k,looe\n", 0) == 0);
    CHECK(std::count(looe.begin(), looe.end(), '\n') == 4);  // header + one row per K
}

TEST_CASE("solve reruns are byte-identical") {
    const fs::path dir = work_dir() / "determinism";
    fs::remove_all(dir);
    REQUIRE(run("synth --n 14 --alpha 0.6 --seed 2 --out-dir " + dir.string()) == 0);
    REQUIRE(run("solve --input " + (dir / "instance.csv").string() +
                " --k 2 --seed 7 --restarts 3 --out-dir " + (dir / "a").string()) == 0);
    REQUIRE(run("solve --input " + (dir / "instance.csv").string() +
                " --k 2 --seed 7 --restarts 3 --out-dir " + (dir / "b").string()) == 0);
    CHECK(slurp(dir / "a" / "solution.json") == slurp(dir / "b" / "solution.json"));
    CHECK(slurp(dir / "a" / "trace.csv") == slurp(dir / "b" / "trace.csv"));
}

TEST_CASE("cv outputs are identical across thread counts") {
    const fs::path dir = work_dir() / "threads";
    fs::remove_all(dir);
    REQUIRE(run("synth --n 12 --alpha 0.9 --seed 4 --out-dir " + dir.string()) == 0);
    const std::string base = "cv --input " + (dir / "instance.csv").string() +
                             " --k-set 1,2 --folds loo --seed 11 --stages 30 ";
    REQUIRE(run(base + "--threads 1 --out-dir " + (dir / "t1").string()) == 0);
    REQUIRE(run(base + "--threads 2 --out-dir " + (dir / "t2").string()) == 0);
    CHECK(slurp(dir / "t1" / "cv_report.json") == slurp(dir / "t2" / "cv_report.json"));
    CHECK(slurp(dir / "t1" / "looe.csv") == slurp(dir / "t2" / "looe.csv"));
    CHECK(slurp(dir / "t1" / "frequencies.csv") == slurp(dir / "t2" / "frequencies.csv"));
}

TEST_CASE("synth is reproducible and validates parameters") {
    const fs::path dir = work_dir() / "synthrepro";
    fs::remove_all(dir);
    REQUIRE(run("synth --n 10 --seed 5 --out-dir " + (dir / "a").string()) == 0);
    REQUIRE(run("synth --n 10 --seed 5 --out-dir " + (dir / "b").string()) == 0);
    CHECK(slurp(dir / "a" / "instance.csv") == slurp(dir / "b" / "instance.csv"));
    CHECK(slurp(dir / "a" / "truth.json") == slurp(dir / "b" / "truth.json"));
    CHECK(run("synth --n 10 --rho0 0 --out-dir " + dir.string()) == 3);  // empty signal
}

TEST_CASE("exit codes follow the usage/data/numerical taxonomy") {
    const fs::path dir = work_dir() / "exitcodes";
    fs::remove_all(dir);
    REQUIRE(run("synth --n 10 --alpha 0.5 --seed 6 --out-dir " + dir.string()) == 0);
    const std::string input = (dir / "instance.csv").string();

    CHECK(run("nonsense") == 1);
    CHECK(run("solve --input " + input) == 1);  // --k missing
    CHECK(run("solve --input " + input + " --k 9 --out-dir " + dir.string()) == 1);  // K > M
    CHECK(run("cv --input " + input + " --k-set 1:2 --folds banana") == 1);
    CHECK(run("solve --input /no/such/file.csv --k 1") == 2);

    const fs::path bad = dir / "bad.csv";
    std::ofstream(bad) << "y,a\n1,huh\n";
    CHECK(run("solve --input " + bad.string() + " --k 1 --out-dir " + dir.string()) == 2);

    // enumeration cap: C(40, 10) is far beyond 2e6
    const fs::path wide = dir / "wide";
    REQUIRE(run("synth --n 40 --alpha 0.5 --seed 8 --out-dir " + wide.string()) == 0);
    CHECK(run("validate --input " + (wide / "instance.csv").string() + " --k 10 --steps 10 " +
              "--out-dir " + wide.string()) == 3);
}

TEST_CASE("validate passes its oracle checks on a desk-scale instance") {
    const fs::path dir = work_dir() / "validate";
    fs::remove_all(dir);
    REQUIRE(run("synth --n 10 --alpha 0.8 --rho0 0.2 --seed 12 --out-dir " + dir.string()) == 0);
    REQUIRE(run("validate --input " + (dir / "instance.csv").string() +
                " --k 2 --beta 2 --steps 200000 --trials 10 --seed 3 --out-dir " +
                dir.string()) == 0);
    const json doc = load_json(dir / "validate.json");
    CHECK(doc["pass"] == true);
    CHECK(doc["equilibrium"]["tv"].get<double>() < 0.02);
    CHECK(doc["optimality"]["hits"] == 10);
}
