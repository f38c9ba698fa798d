#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
};

// Runs the tool with stderr discarded; `args` is passed through the shell.
Run run(const std::string& args) {
    const std::string cmd = std::string("cd '") + REFLECTQ_DATA_DIR + "' && '" + REFLECTQ_CLI_PATH + "' " + args +
                            " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) return {-1, ""};
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double entry(const json& matrix, int k) { return matrix.at("re").at(static_cast<std::size_t>(k)).get<double>(); }

std::string temp(const std::string& name) { return ::testing::TempDir() + "reflectq_" + name; }

}  // namespace

TEST(CliChannel, CheckCpFlagsTranspose) {
    const auto r = run("channel check-cp transpose.json");
    EXPECT_EQ(r.code, 1);
    const json j = json::parse(r.out);
    EXPECT_FALSE(j.at("completely_positive").get<bool>());
    EXPECT_NEAR(j.at("choi_min_eigenvalue").get<double>(), -1.0, 1e-10);

    const std::string report = temp("cp_report.json");
    run("--report '" + report + "' channel check-cp transpose.json");
    const json rep = json::parse(slurp(report));
    EXPECT_NE(rep.at("summary").at("message").get<std::string>().find("Choi min eigenvalue -"), std::string::npos);
    EXPECT_EQ(rep.at("exit_code").get<int>(), 1);
    EXPECT_TRUE(rep.contains("wall_time_s"));
}

TEST(CliChannel, StandardBitFlipOnKet0) {
    const auto r = run("channel standard bit_flip 0.25 --apply ket0.json");
    ASSERT_EQ(r.code, 0);
    const json m = json::parse(r.out).at("matrix");
    EXPECT_NEAR(entry(m, 0), 0.75, 1e-15);
    EXPECT_NEAR(entry(m, 3), 0.25, 1e-15);
    EXPECT_NEAR(entry(m, 1), 0.0, 1e-15);
}

TEST(CliChannel, ChoiOfIdentity) {
    const auto r = run("channel choi identity.json");
    ASSERT_EQ(r.code, 0);
    const json m = json::parse(r.out).at("matrix");
    ASSERT_EQ(m.at("rows").get<int>(), 4);
    for (int i = 0; i < 16; ++i) {
        const bool corner = i == 0 || i == 3 || i == 12 || i == 15;
        EXPECT_EQ(entry(m, i), corner ? 1.0 : 0.0) << i;
    }
}

TEST(CliChannel, DilateComposeApply) {
    const std::string bf = temp("bf.json");
    ASSERT_EQ(run("-o '" + bf + "' channel standard bit_flip 0.25").code, 0);
    const auto dil = run("channel dilate '" + bf + "'");
    ASSERT_EQ(dil.code, 0);
    EXPECT_EQ(json::parse(dil.out).at("env_dim").get<int>(), 2);

    const std::string twice = temp("bf2.json");
    ASSERT_EQ(run("-o '" + twice + "' channel compose '" + bf + "' '" + bf + "'").code, 0);
    const auto applied = run("channel apply '" + twice + "' ket0.json");
    ASSERT_EQ(applied.code, 0);
    EXPECT_NEAR(entry(json::parse(applied.out).at("matrix"), 3), 0.375, 1e-15);
}

TEST(CliReflect, ClassicalSureLoss) {
    const auto r = run("reflect classical certain_price_book.json");
    EXPECT_EQ(r.code, 1);
    const json j = json::parse(r.out);
    EXPECT_NEAR(j.at("dutch_book").at("guaranteed_loss").get<double>(), 0.2, 1e-12);
    EXPECT_NE(j.at("table").get<std::string>().find("guaranteed loss: 0.200000"), std::string::npos);

    EXPECT_EQ(run("reflect classical coherent_price_book.json").code, 0);
}

TEST(CliReflect, QuantumAndEntropyGap) {
    EXPECT_EQ(run("reflect quantum which_path_scenario.json --claimed maximally_mixed.json").code, 0);
    const auto bad = run("reflect quantum which_path_scenario.json --claimed plus.json");
    EXPECT_EQ(bad.code, 1);
    EXPECT_NEAR(json::parse(bad.out).at("residual").get<double>(), 0.5, 1e-12);

    const auto gap = run("reflect entropy-gap trivial_scenario.json");
    ASSERT_EQ(gap.code, 0);
    EXPECT_NEAR(json::parse(gap.out).at("entropy_gap").get<double>(), 0.0, 1e-12);
    const auto ln2 = run("reflect entropy-gap which_path_scenario.json");
    EXPECT_NEAR(json::parse(ln2.out).at("entropy_gap").get<double>(), std::log(2.0), 1e-12);
}

TEST(CliDynamics, DeriveEvolveFixedPoint) {
    const auto d = run("dynamics derive bit_flip_judgment.json");
    ASSERT_EQ(d.code, 0);
    const json ch = json::parse(d.out).at("channel");
    ASSERT_EQ(ch.at("kraus").size(), 2u);
    EXPECT_NEAR(entry(ch.at("kraus")[0], 0), std::sqrt(0.75), 1e-15);
    EXPECT_NEAR(entry(ch.at("kraus")[1], 1), std::sqrt(0.25), 1e-15);

    const auto e = run("dynamics evolve identity.json plus.json --steps 7");
    ASSERT_EQ(e.code, 0);
    EXPECT_NEAR(entry(json::parse(e.out).at("matrix"), 1), 0.5, 1e-15);

    const std::string ad = temp("ad.json");
    ASSERT_EQ(run("-o '" + ad + "' channel standard amplitude_damping 0.3").code, 0);
    const auto fp = run("dynamics fixed-point '" + ad + "'");
    ASSERT_EQ(fp.code, 0);
    EXPECT_NEAR(entry(json::parse(fp.out).at("matrix"), 0), 1.0, 1e-9);

    EXPECT_EQ(run("dynamics check-irrelevance which_path_judgment.json --rho-1-0 plus.json --rho-2-0 "
                  "maximally_mixed.json")
                  .code,
              0);
    EXPECT_EQ(run("dynamics check-irrelevance which_path_judgment.json --rho-1-0 plus.json --rho-2-0 plus.json").code,
              1);
}

TEST(CliDynamics, StateDependentJudgmentIsInputError) {
    EXPECT_EQ(run("dynamics derive state_dependent_judgment.json").code, 2);
}

TEST(CliTrajectory, SurvivalFromExcited) {
    const auto r = run("trajectory survival --gamma 1 --omega 0 --t 1 --init e");
    ASSERT_EQ(r.code, 0);
    EXPECT_NEAR(json::parse(r.out).at("no_click_probability").get<double>(), std::exp(-1.0), 1e-6);
}

TEST(CliTrajectory, RunIsReproducible) {
    const auto a = run("trajectory run --seed 42 --gamma 1 --omega 2");
    const auto b = run("trajectory run --seed 42 --gamma 1 --omega 2");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.out.rfind("t,rho_ee,re_rho_eg,im_rho_eg,trace\n", 0), 0u);
    EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 51);
    EXPECT_NE(run("trajectory run --seed 43 --gamma 1 --omega 2").out, a.out);
}

TEST(CliTrajectory, EnvironmentSeedIsDefault) {
    const auto flag = run("trajectory run --seed 5 --gamma 1 --omega 2 --t 5 --outputs 10");
    const auto env = run("trajectory run --gamma 1 --omega 2 --t 5 --outputs 10").out;
    const std::string cmd = std::string("cd '") + REFLECTQ_DATA_DIR + "' && REFLECTQ_SEED=5 '" + REFLECTQ_CLI_PATH +
                            "' trajectory run --gamma 1 --omega 2 --t 5 --outputs 10 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    ASSERT_NE(pipe, nullptr);
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    pclose(pipe);
    EXPECT_EQ(out, flag.out);
    EXPECT_NE(out, env);
}

TEST(CliTrajectory, EnsembleIndependentOfWorkers) {
    const std::string args = "trajectory ensemble --gamma 1 --omega 2 --n 300 --t 2 --seed 3";
    const auto one = run(args + " --workers 1");
    const auto four = run(args + " --workers 4");
    ASSERT_EQ(one.code, 0);
    EXPECT_EQ(one.out, four.out);
}

TEST(CliTrajectory, CompareAgainstMaster) {
    const auto r = run("trajectory compare --gamma 1 --omega 2 --n 2000 --t 2 --outputs 10 --seed 7");
    ASSERT_EQ(r.code, 0);
    const json j = json::parse(r.out);
    EXPECT_TRUE(j.at("agree").get<bool>());
    EXPECT_LE(j.at("max_z").get<double>(), 3.0);
    EXPECT_EQ(j.at("times").size(), 10u);
}

TEST(CliTrajectory, MasterCsv) {
    const auto r = run("trajectory master --gamma 1 --omega 0 --init e --t 1 --outputs 1");
    ASSERT_EQ(r.code, 0);
    const auto line = r.out.substr(r.out.find('\n') + 1);
    EXPECT_NEAR(std::stod(line.substr(line.find(',') + 1)), std::exp(-1.0), 1e-6);
}

TEST(CliTrajectory, StepTooLargeReportsTimeAndProbability) {
    const std::string report = temp("step_report.json");
    const auto r = run("--report '" + report + "' trajectory run --gamma 1 --init e --dt 0.125 --t 1 --outputs 8");
    EXPECT_EQ(r.code, 2);
    const json err = json::parse(slurp(report)).at("error");
    EXPECT_EQ(err.at("type").get<std::string>(), "StepTooLarge");
    EXPECT_NEAR(err.at("dp").get<double>(), 0.125, 1e-12);
    EXPECT_NEAR(err.at("t").get<double>(), 0.0, 1e-12);
}

TEST(CliErrors, MalformedInputsExitTwo) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("channel").code, 2);
    EXPECT_EQ(run("channel choi /nonexistent.json").code, 2);
    EXPECT_EQ(run("channel standard nope 0.5").code, 2);
    EXPECT_EQ(run("channel standard bit_flip 1.5").code, 2);
    EXPECT_EQ(run("channel apply identity.json certain_price_book.json").code, 2);
    EXPECT_EQ(run("trajectory run --dt -1").code, 2);
    EXPECT_EQ(run("trajectory run --t 1 --dt 0.3").code, 2);

    const std::string bad = temp("bad.json");
    std::ofstream(bad) << "{ \"rows\": 2, ";
    EXPECT_EQ(run("channel choi '" + bad + "'").code, 2);
    EXPECT_EQ(run("--help").code, 0);
}
