#include "doctest.h"

#include "mfg/cli.hpp"
#include "mfg/gaussian.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace mfg;

namespace {

const fs::path kFixtures = MFG_FIXTURES_DIR;

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("mfglab_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
};

int run(std::vector<std::string> args, std::string* err_text = nullptr) {
    args.insert(args.begin(), "mfglab");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (err_text) *err_text = err.str();
    return code;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::map<std::string, std::string> summary(const fs::path& dir) {
    std::map<std::string, std::string> kv;
    std::ifstream in(dir / "summary.txt");
    for (std::string line; std::getline(in, line);) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::string* header) {
    std::ifstream in(p);
    std::getline(in, *header);
    std::vector<std::vector<double>> rows;
    for (std::string line; std::getline(in, line);) {
        std::vector<double> row;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) row.push_back(std::strtod(cell.c_str(), nullptr));
        rows.push_back(row);
    }
    return rows;
}

cli::Config parse(const std::string& text) {
    std::istringstream in(text);
    return cli::parse_config(in, "inline");
}

} // namespace

TEST_CASE("config parsing") {
    auto c = parse("# comment\n\nkind = gaussian\n  a=-2  # trailing\nx0 = 0.2\n");
    CHECK(c.values.size() == 3);
    CHECK(c.values.at("kind") == "gaussian");
    CHECK(c.values.at("a") == "-2");
    CHECK_THROWS_AS(parse("a -2\n"), cli::ConfigError);
    CHECK_THROWS_AS(parse("= 3\n"), cli::ConfigError);
    CHECK_THROWS_AS(parse("a =\n"), cli::ConfigError);
    CHECK_THROWS_AS(parse("a = 1\na = 2\n"), cli::ConfigError);
}

TEST_CASE("key reader") {
    auto c = parse("a = 1.5\nn = 12\nflag = true\nbad = x1\nextra = 0\n");
    cli::KeyReader r(c);
    CHECK(r.number("a", 0) == 1.5);
    CHECK(r.number("missing", 7) == 7);
    CHECK(r.count("n", 0) == 12);
    CHECK(r.flag("flag", false));
    CHECK_THROWS_AS(r.number("bad", 0), cli::ConfigError);
    CHECK_THROWS_AS(r.required_number("absent"), cli::ConfigError);
    CHECK_THROWS_AS(r.finish(), cli::ConfigError); // "extra" was never read
}

TEST_CASE("gaussian curves round-trip exactly") {
    Scratch s("gaussian");
    REQUIRE(run({"gaussian", (kFixtures / "audit.cfg").string(), "--out", s.dir.string()}) == cli::kOk);
    std::string header;
    auto rows = read_csv(s.dir / "curves.csv", &header);
    CHECK(header == "t,A,B,C,K2,K1,K0,Q");
    auto sol = gaussian::solve({-2, 0, 0, 0.2, 2}, {0, 0, 0}, GaussianInitial(0.2, 0.5));
    REQUIRE(rows.size() == sol.path.times.size());
    CHECK(rows.front()[7] == 0.2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i][0] == sol.path.times[i]);
        CHECK(rows[i][1] == sol.path.A[i]);
        CHECK(rows[i][5] == sol.path.K1[i]);
        CHECK(rows[i][7] == sol.mode.values[i]);
    }
    auto kv = summary(s.dir);
    CHECK(kv["global"] == "true");
    CHECK(kv["regime"] == "subcritical");
}

TEST_CASE("identical inputs give identical files") {
    Scratch a("det_a"), b("det_b");
    for (const auto* dir : {&a.dir, &b.dir}) {
        REQUIRE(run({"halfline", (kFixtures / "halfline.cfg").string(), "--out", dir->string(), "--svg"}) == 0);
        REQUIRE(run({"verify", (kFixtures / "audit.cfg").string(), "--mc", "--out", (*dir / "v").string()}) == 0);
    }
    for (const auto& f : {"curves.csv", "mode.csv", "summary.txt", "mode.svg", "v/mc.csv", "v/summary.txt"})
        CHECK_MESSAGE(slurp(a.dir / f) == slurp(b.dir / f), f);
}

TEST_CASE("invalid configurations exit with 1") {
    Scratch s("invalid");
    {
        std::ofstream cfg(s.dir / "typo.cfg");
        cfg << "kind = gaussian\na = -2\ndelta = 0.2\nhorizon = 2\nx0 = 0\nlambda = 0.5\nlamda = 0.5\n";
    }
    std::string err;
    CHECK(run({"gaussian", (s.dir / "typo.cfg").string(), "--out", (s.dir / "o").string()}, &err) ==
          cli::kInvalidConfig);
    CHECK(err.find("lamda") != std::string::npos);
    CHECK_FALSE(fs::exists(s.dir / "o"));
    {
        std::ofstream cfg(s.dir / "neg.cfg");
        cfg << "kind = gaussian\na = -2\ndelta = -1\nhorizon = 2\nx0 = 0\nlambda = 0.5\n";
    }
    CHECK(run({"gaussian", (s.dir / "neg.cfg").string(), "--out", (s.dir / "o2").string()}) == cli::kInvalidConfig);
    CHECK(run({"gaussian", (s.dir / "missing.cfg").string(), "--out", (s.dir / "o3").string()}) ==
          cli::kInvalidConfig);
    CHECK(run({"halfline", (kFixtures / "audit.cfg").string(), "--out", (s.dir / "o4").string()}) ==
          cli::kInvalidConfig);
    CHECK(run({}) == cli::kInvalidConfig);
}

TEST_CASE("blow-up exits with 2 and still writes the mode") {
    Scratch s("blowup");
    CHECK(run({"gaussian", (kFixtures / "blowup.cfg").string(), "--out", s.dir.string()}) == cli::kSolverFailure);
    auto kv = summary(s.dir);
    CHECK(kv["global"] == "false");
    CHECK(std::abs(std::stod(kv["blowup_time"]) - 0.2146018) <= 1e-3);
    CHECK(fs::exists(s.dir / "mode.csv"));
    CHECK_FALSE(fs::exists(s.dir / "curves.csv"));
}

TEST_CASE("merton subcommands report the outcome") {
    Scratch s("merton");
    REQUIRE(run({"merton-drift", (kFixtures / "figure1_gamma1.cfg").string(), "--out", (s.dir / "d").string()}) == 0);
    auto d = summary(s.dir / "d");
    CHECK(d["outcome"] == "opinion_forms");
    CHECK(std::abs(std::stod(d["limit"]) - 0.712659) <= 1e-6);
    REQUIRE(run({"merton-vol", (kFixtures / "merton_vol.cfg").string(), "--out", (s.dir / "v").string()}) == 0);
    CHECK(summary(s.dir / "v")["outcome"] == "opinion_forms");
}

TEST_CASE("figure1 reproduces the three curves") {
    Scratch s("figure1");
    REQUIRE(run({"figure1", "--out", s.dir.string()}) == cli::kOk);
    auto kv = summary(s.dir);
    CHECK(kv["reproduced"] == "true");
    CHECK(kv["gamma0_spacing_ok"] == "true");
    CHECK(kv["larger_gamma_closer"] == "true");
    std::string header;
    auto rows = read_csv(s.dir / "figure1.csv", &header);
    CHECK(header == "t,Q_gamma0,Q_gamma1,Q_gamma2");
    CHECK(rows.front()[1] == 0.2);
    CHECK(slurp(s.dir / "figure1.svg").rfind("<svg", 0) == 0);
}

TEST_CASE("verify with the PDE oracle") {
    Scratch s("verify");
    REQUIRE(run({"verify", (kFixtures / "audit.cfg").string(), "--pde", "--out", s.dir.string()}) == cli::kOk);
    auto kv = summary(s.dir);
    CHECK(kv["verified"] == "true");
    const double dx = (std::stod(kv["pde_x_max"]) - std::stod(kv["pde_x_min"])) / (std::stod(kv["pde_nx"]) - 1);
    CHECK(std::stod(kv["pde_mode_tolerance"]) == doctest::Approx(2 * dx));
    CHECK(std::stod(kv["pde_max_mode_deviation"]) <= 2 * dx);
}

TEST_CASE("formula audit table") {
    Scratch s("audit");
    REQUIRE(run({"audit-formulas", "--out", s.dir.string()}) == cli::kOk);
    std::ifstream in(s.dir / "audit.csv");
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    REQUIRE(lines.size() == 7);
    CHECK(lines[1].rfind("subcritical_A,matches,", 0) == 0);
    CHECK(summary(s.dir)["equilibrium_winner"] == "stationary");
}
