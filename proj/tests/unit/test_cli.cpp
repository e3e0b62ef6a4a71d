#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result run_cli(const std::string& args) {
    const std::string cmd = std::string(RAINBOW_CLI_PATH) + " " + args + " 2>/dev/null";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe) != nullptr) r.out += buf;
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

}  // namespace

TEST_CASE("invalid configuration exits with 2") {
    CHECK(run_cli("price --set 4").code == 2);
    CHECK(run_cli("price --payoff max").code == 2);
    CHECK(run_cli("price --m 2").code == 2);
    CHECK(run_cli("price --schemes RK4 --m 8").code == 2);
    CHECK(run_cli("temporal-study --m 8 --n-list 8,4").code == 2);
    CHECK(run_cli("total-study --payoff avg --m-list 8").code == 2);
    CHECK(run_cli("price --m 8 --s1 1e6").code == 2);
    CHECK(run_cli("").code == 2);
    CHECK(run_cli("price --config /nonexistent/file.cfg").code == 2);
}

TEST_CASE("numerical failure exits with 3") {
    // Extreme clustering pushes the log grid past its size cap.
    CHECK(run_cli("price --m 400 --concentration 1e-9 --n-list 2").code == 3);
}

TEST_CASE("price") {
    const Result r = run_cli("price --set 1 --payoff min --m 12 --n-list 6 --schemes mcs2");
    CHECK(r.code == 0);
    CHECK(r.out.find("price=") != std::string::npos);
    CHECK(r.out.find("scheme=MCS2") != std::string::npos);
}

TEST_CASE("config file") {
    const auto dir = std::filesystem::temp_directory_path() / "rainbow_cli_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    {
        std::ofstream cfg(dir / "run.cfg");
        cfg << "set=2\npayoff=avg\nm=10\nn-list=4,8\nschemes=MCS,SC2A\nreference-steps=32\nout-dir="
            << (dir / "out").string() << "\n";
    }
    const Result r = run_cli("temporal-study --config " + (dir / "run.cfg").string());
    CHECK(r.code == 0);
    CHECK(r.out.rfind("set,payoff,scheme,m,N,N_prime,error,observed_order,wall_ms\n", 0) == 0);
    const auto csv = dir / "out" / "temporal_set2_avg_m10.csv";
    CHECK(std::filesystem::exists(csv));
    CHECK(std::filesystem::exists(dir / "out" / "temporal_set2_avg_m10.svg"));
    std::ifstream in(csv);
    int lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    CHECK(lines == 5);
    std::filesystem::remove_all(dir);
}

TEST_CASE("total study and reference values") {
    const auto dir = std::filesystem::temp_directory_path() / "rainbow_cli_total";
    const Result t = run_cli("total-study --set 3 --m-list 8,16 --schemes MCS2 --out-dir " + dir.string());
    CHECK(t.code == 0);
    CHECK(std::filesystem::exists(dir / "total_set3_min.csv"));
    std::filesystem::remove_all(dir);

    const std::string untimed = "total-study --set 3 --m-list 8,16 --schemes MCS2,CNAB --no-timing --out-dir " + dir.string();
    const Result a = run_cli(untimed);
    const Result b = run_cli(untimed);
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.find(",0.000\n") != std::string::npos);
    std::filesystem::remove_all(dir);

    const Result r = run_cli("reference --set 1 --paths 20000 --seed 7");
    CHECK(r.code == 0);
    CHECK(r.out.find("analytic=") != std::string::npos);
    CHECK(r.out.find("monte_carlo=") != std::string::npos);
    CHECK(run_cli("reference --set 1 --paths 20000 --seed 7").out == r.out);
}
