// End-to-end checks of the command-line tool: spawns the built binary and
// inspects its outputs, exit codes and determinism guarantees.

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cbitcl/measure.hpp"
#include "cbitcl/model_io.hpp"
#include "models.hpp"
#include "oracles.hpp"

using namespace cbitcl;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

fs::path work_dir() {
    auto dir = fs::temp_directory_path() / "cbitcl_cli_tests";
    fs::create_directories(dir);
    return dir;
}

RunResult run_cli(const std::string& args) {
    const fs::path out_file = work_dir() / "stdout.txt";
    const fs::path err_file = work_dir() / "stderr.txt";
    const std::string cmd = std::string(CBITCL_CLI_PATH) + " " + args + " > " +
                            out_file.string() + " 2> " + err_file.string();
    const int status = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = status == -1 ? -1 : WEXITSTATUS(status);
    auto read_file = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    res.output = read_file(out_file) + read_file(err_file);
    return res;
}

fs::path write_model(const std::string& name, const CBITCLModel& m) {
    const fs::path p = work_dir() / name;
    std::ofstream out(p);
    out << serialize_model(m);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("price subcommand reproduces the Black-Scholes value") {
    const auto cfg = write_model("bs.cfg", fixtures::bs_degenerate());
    auto res = run_cli("price --model " + cfg.string() + " --strike 1.0 --maturity 1.0");
    REQUIRE(res.exit_code == 0);
    const auto out = nlohmann::json::parse(res.output);
    CHECK(std::abs(out["price"].get<double>() - 0.0796557) < 1e-6);
    CHECK(out["damping"].get<double>() == -0.5);
    CHECK(out["panels"].get<int>() > 0);
    CHECK(out["model_hash"].get<std::string>() == model_hash(fixtures::bs_degenerate()));
    CHECK(out.contains("err_estimate"));
    CHECK(out.contains("model"));
}

TEST_CASE("moments subcommand flags the collapsed lifetime off the window") {
    const auto cfg = write_model("ac.cfg", fixtures::alpha_cir());
    auto res = run_cli("moments --model " + cfg.string() + " --u3 1.2");
    REQUIRE(res.exit_code == 0);
    const auto out = nlohmann::json::parse(res.output);
    CHECK(out["lifetime"].get<double>() == 0.0);
    CHECK(out["classification"].get<std::string>() == "above_chi");

    auto inside = run_cli("moments --model " + cfg.string() + " --u3 0.5");
    REQUIRE(inside.exit_code == 0);
    const auto out2 = nlohmann::json::parse(inside.output);
    CHECK(out2["lifetime"].get<std::string>() == "inf");
    CHECK(out2["xi"].is_number());
}

TEST_CASE("transform-measure with the identity tilt reproduces the model file") {
    const auto cfg = write_model("tc.cfg", fixtures::tempered_cgmy());
    const auto out_path = work_dir() / "tilted.cfg";
    auto res = run_cli("transform-measure --model " + cfg.string() +
                       " --zeta 0 --lambda 0 --output " + out_path.string());
    REQUIRE(res.exit_code == 0);
    const auto back = load_model(out_path.string());
    const auto original = fixtures::tempered_cgmy();
    CHECK(model_hash(back) == model_hash(original));
}

TEST_CASE("transform-measure output re-parses to the in-memory transform") {
    const auto m = fixtures::tempered_cgmy();
    const auto cfg = write_model("tc2.cfg", m);
    const auto out_path = work_dir() / "tilted2.cfg";
    auto res = run_cli("transform-measure --model " + cfg.string() +
                       " --zeta -0.5 --lambda 0.5 --output " + out_path.string());
    REQUIRE(res.exit_code == 0);
    const auto expected = esscher_transform(m, EsscherSpec(m, -0.5, 0.5));
    const auto back = load_model(out_path.string());
    CHECK(back.phi.b_x == expected.phi.b_x);
    CHECK(back.xi.b_z == expected.xi.b_z);
    CHECK(back.phi.pi == expected.phi.pi);
    CHECK(back.xi.gamma == expected.xi.gamma);
    CHECK(model_hash(back) == model_hash(expected));
}

TEST_CASE("simulate is deterministic for a fixed seed and differs across seeds") {
    const auto cfg = write_model("cir.cfg", fixtures::cir_brownian());
    const auto f1 = work_dir() / "run1.csv";
    const auto f2 = work_dir() / "run2.csv";
    const auto f3 = work_dir() / "run3.csv";
    const std::string common = "--paths 25 --step 0.03125 simulate --model " + cfg.string() +
                               " --horizon 1.0 --output ";
    REQUIRE(run_cli("--seed 9 " + common + f1.string()).exit_code == 0);
    REQUIRE(run_cli("--seed 9 " + common + f2.string()).exit_code == 0);
    REQUIRE(run_cli("--seed 10 " + common + f3.string()).exit_code == 0);
    const auto a = slurp(f1);
    CHECK(a == slurp(f2));
    CHECK(a != slurp(f3));
    CHECK(a.find("path,t,X,Y,Z") != std::string::npos);
    CHECK(a.find("model_hash=" + model_hash(fixtures::cir_brownian())) != std::string::npos);
}

TEST_CASE("wings subcommand reports the flat-window slopes") {
    const auto cfg = write_model("ac2.cfg", fixtures::alpha_cir());
    auto res = run_cli("wings --model " + cfg.string() + " --maturity 1.0 --lambda 1.0");
    REQUIRE(res.exit_code == 0);
    const auto out = nlohmann::json::parse(res.output);
    CHECK(std::abs(out["left_slope"].get<double>() - 2.0) < 1e-3);
    CHECK(std::abs(out["right_slope"].get<double>() - 2.0) < 1e-3);
}

TEST_CASE("char-fn subcommand evaluates the joint transform") {
    const auto cfg = write_model("bs2.cfg", fixtures::bs_degenerate());
    auto res = run_cli("char-fn --model " + cfg.string() + " --maturity 1.0 --w3 1.0");
    REQUIRE(res.exit_code == 0);
    const auto out = nlohmann::json::parse(res.output);
    const auto want = oracles::bs_char_fn(0.04, 1.0); // deterministic clock
    CHECK(std::abs(out["re"].get<double>() - want.real()) < 1e-9);
    CHECK(std::abs(out["im"].get<double>() - want.imag()) < 1e-9);
}

TEST_CASE("error reporting: missing file, bad config, domain violations") {
    auto missing = run_cli("price --model /nonexistent.cfg --strike 1 --maturity 1");
    CHECK(missing.exit_code == 1);
    CHECK(missing.output.find("E-CONFIG") != std::string::npos);

    const auto bad_path = work_dir() / "bad.cfg";
    std::ofstream(bad_path) << "[initial_state]\nx0 = oops\n";
    auto bad = run_cli("moments --model " + bad_path.string());
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("E-CONFIG") != std::string::npos);

    const auto cfg = write_model("ac3.cfg", fixtures::alpha_cir());
    auto dom = run_cli("moments --model " + cfg.string() + " --u1 0.5"); // outside D_X
    CHECK(dom.exit_code == 1);
    CHECK(dom.output.find("E-DOMAIN") != std::string::npos);
}
