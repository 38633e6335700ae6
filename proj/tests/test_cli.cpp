#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;
using namespace optospring;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("optospring_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string out(const std::string& sub = "") const { return (dir_ / sub).string(); }

    fs::path dir_;
};

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

} // namespace

TEST_F(CliTest, DeriveWritesManifestAndResolvedConfig) {
    const auto r = run({"derive", "--config", OPTOSPRING_DEFAULT_CONFIG, "--out", out()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto m = read_json(dir_ / "manifest.json");
    EXPECT_EQ(m["command"], "derive");
    EXPECT_EQ(m["version"], cli::version);
    EXPECT_EQ(m["seed"], 1);
    EXPECT_NEAR(m["derived"]["linewidth_hwhm_rad_per_s"].get<double>(), 66620.546, 1e-3);
    EXPECT_TRUE(fs::exists(dir_ / "config.resolved.yaml"));
    EXPECT_TRUE(fs::exists(dir_ / "derived.json"));
    EXPECT_EQ(parse_config(out("config.resolved.yaml")).cavity.length, 0.9);
}

TEST_F(CliTest, ResponsePresetDIsStable) {
    const auto r = run({"response", "--preset", "d", "--out", out(), "--quiet"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    const auto bode = slurp(dir_ / "bode.csv");
    EXPECT_EQ(bode.substr(0, bode.find('\n')), "frequency_hz,magnitude_m_per_n,phase_deg,phase_unwrapped_deg");
    const auto j = read_json(dir_ / "resonance.json");
    EXPECT_TRUE(j["extracted"]["stable"].get<bool>());
    EXPECT_GT(j["extracted"]["gamma_eff_per_s"].get<double>(), 0.0);
    EXPECT_TRUE(j["analytic"]["stable"].get<bool>());
}

TEST_F(CliTest, ResponsePresetCIsUnstable) {
    const auto r = run({"response", "--preset", "c", "--out", out(), "--quiet"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_FALSE(read_json(dir_ / "resonance.json")["extracted"]["stable"].get<bool>());
}

TEST_F(CliTest, StabilityMapDefaultGrid) {
    const auto r = run({"stability-map", "--config", OPTOSPRING_DEFAULT_CONFIG, "--out", out()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = read_json(dir_ / "stability_summary.json");
    EXPECT_EQ(j["configured_cell"]["label"], "stable");
    EXPECT_EQ(j["carrier_points"], 200);
    EXPECT_NEAR(j["configured_cell"]["delta_c_over_gamma"].get<double>(), 3.0, 0.03);
    EXPECT_NEAR(j["configured_cell"]["delta_sc_over_gamma"].get<double>(), -0.3, 0.015);
    std::ifstream csv(dir_ / "stability_map.csv");
    std::string line;
    std::size_t rows = 0;
    std::getline(csv, line);
    while (std::getline(csv, line)) ++rows;
    EXPECT_EQ(rows, 200u * 201u);
}

TEST_F(CliTest, TemperatureFromSuppliedSpectrum) {
    fs::create_directories(dir_);
    SpectrumSeries s;
    for (int i = 0; i <= 500; ++i) {
        s.frequency_hz.push_back(10.0 * i);
        s.asd.push_back(1e-16);
    }
    csv::write_file(out("in.csv"), s);
    const auto r = run({"temperature", "--preset", "d", "--spectrum", out("in.csv"), "--band", "1500:2300",
                        "--out", out("run")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = read_json(dir_ / "run" / "thermal_summary.json");
    EXPECT_NEAR(j["x_rms_m"].get<double>(), 1e-16 * std::sqrt(800.0), 1e-20);
    const double k = j["k_total_at_omega_eff_n_per_m"].get<double>();
    EXPECT_NEAR(j["t_eff_k"].get<double>(), t_eff_from_rms(k, 1e-16 * std::sqrt(800.0)), 1e-12);
    EXPECT_GT(j["occupation"].get<double>(), 0.0);
}

TEST_F(CliTest, SimulateReportsGrowth) {
    const auto r = run({"simulate", "--preset", "c", "--out", out(), "--quiet"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = read_json(dir_ / "growth.json");
    const double pred = j["predicted_growth_rate_per_s"].get<double>();
    EXPECT_NEAR(j["growth_rate_per_s"].get<double>(), pred, 0.1 * pred);
    const auto traj = slurp(dir_ / "trajectory.csv");
    EXPECT_EQ(traj.substr(0, traj.find('\n')), "time_s,x_m,v_m_per_s,p_circ_1_w,p_circ_2_w,f_rad_n");
}

TEST_F(CliTest, RerunFromManifestIsBitIdentical) {
    const auto a = run({"simulate", "--preset", "d", "--seed", "9", "--duration", "0.01", "--out", out("a"), "--quiet"});
    ASSERT_EQ(a.code, 0) << a.err;
    auto cfg_text = slurp(dir_ / "a" / "config.resolved.yaml");
    // thermal noise on, through the resolved config
    const auto pos = cfg_text.find("thermal_noise: false");
    ASSERT_NE(pos, std::string::npos);
    cfg_text.replace(pos, 20, "thermal_noise: true");
    fs::create_directories(dir_ / "b");
    std::ofstream(dir_ / "b.yaml") << cfg_text;
    // With noise the growth fit may legitimately refuse (exit 2); the replay
    // must reproduce whichever outcome the first run had.
    const auto b = run({"simulate", "--config", out("b.yaml"), "--out", out("b"), "--quiet"});
    ASSERT_TRUE(b.code == 0 || b.code == 2) << b.err;
    const auto c = run({"simulate", "--config", out("b/config.resolved.yaml"), "--out", out("c"), "--quiet"});
    EXPECT_EQ(c.code, b.code);
    EXPECT_EQ(slurp(dir_ / "b" / "trajectory.csv"), slurp(dir_ / "c" / "trajectory.csv"));
    EXPECT_EQ(slurp(dir_ / "b" / "growth.json"), slurp(dir_ / "c" / "growth.json"));
    EXPECT_EQ(read_json(dir_ / "c" / "manifest.json")["seed"], 9);
}

TEST_F(CliTest, EnvironmentVariableSuppliesConfig) {
    fs::create_directories(dir_);
    std::ofstream(dir_ / "env.yaml") << "bath:\n  temperature_k: 4.2\n";
    ::setenv(cli::config_env_var, out("env.yaml").c_str(), 1);
    const auto r = run({"derive", "--out", out("run"), "--quiet"});
    ::unsetenv(cli::config_env_var);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(parse_config(out("run/config.resolved.yaml")).bath.temperature, 4.2);
}

TEST_F(CliTest, ValidationFailuresExitOne) {
    fs::create_directories(dir_);
    std::ofstream(dir_ / "bad.yaml") << "cavity:\n  length_m: -1\n";
    auto r = run({"derive", "--config", out("bad.yaml"), "--out", out("x")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("cavity.length_m"), std::string::npos);
    EXPECT_EQ(run({"derive", "--preset", "z", "--out", out("x")}).code, 1);
    EXPECT_EQ(run({"frobnicate"}).code, 1);
    EXPECT_EQ(run({"stability-map", "--band", "9", "--out", out("x")}).code, 0);
    EXPECT_EQ(run({"temperature", "--band", "9", "--out", out("x")}).code, 1);
    EXPECT_EQ(run({"derive", "--config", out("missing.yaml"), "--out", out("x")}).code, 1);
}

TEST_F(CliTest, NumericalFailureExitsTwo) {
    // A lone red-detuned carrier has negative stiffness: no resonance to solve.
    fs::create_directories(dir_);
    std::ofstream(dir_ / "neg.yaml") << "carrier:\n  detuning_over_gamma: -1\nsubcarrier:\n  input_power_w: 0\n";
    const auto r = run({"response", "--config", out("neg.yaml"), "--out", out("x"), "--quiet"});
    EXPECT_EQ(r.code, 2) << r.err;
    EXPECT_TRUE(fs::exists(dir_ / "x" / "manifest.json"));
}

TEST_F(CliTest, OracleCheckOnShippedDefaults) {
    const auto r = run({"oracle-check", "--config", OPTOSPRING_DEFAULT_CONFIG, "--out", out()});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    const auto j = read_json(dir_ / "oracle_report.json");
    EXPECT_GE(j.size(), 13u);
    for (const auto& line : j) EXPECT_TRUE(line["pass"].get<bool>()) << line["check"];
}
