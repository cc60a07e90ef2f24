#include <gtest/gtest.h>
#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace {

struct Run {
    int code;
    std::string out;
};

// stdout only; stderr goes to a file so error JSON can be checked separately
Run run(const std::string& args, std::string* err = nullptr) {
    const std::string errfile = ::testing::TempDir() + "conelab_stderr.txt";
    const std::string cmd = std::string(CONELAB_BIN) + " " + args + " 2>" + errfile;
    FILE* p = popen(cmd.c_str(), "r");
    std::string out;
    std::array<char, 4096> buf;
    while (std::size_t n = fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
    const int status = pclose(p);
    if (err) {
        std::ifstream in(errfile);
        *err = std::string(std::istreambuf_iterator<char>(in), {});
    }
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> v;
    std::stringstream ss(s);
    for (std::string l; std::getline(ss, l);) v.push_back(l);
    return v;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> v;
    std::stringstream ss(s);
    for (std::string c; std::getline(ss, c, ',');) v.push_back(c);
    return v;
}

}  // namespace

TEST(Cli, ConstantsRow) {
    const auto r = run("constants --n 1,2");
    ASSERT_EQ(r.code, 0);
    const auto L = lines(r.out);
    ASSERT_EQ(L.size(), 6u);
    EXPECT_EQ(L[0], "# schema=constants/1");
    EXPECT_EQ(L[1].rfind("# version=", 0), 0u);
    EXPECT_EQ(L[2].rfind("# config=", 0), 0u);
    EXPECT_EQ(L[3], "n,I_n,J_n,c_n,c_prime_n,a_n,I_error,J_error");
    const auto row = split(L[4]);
    EXPECT_EQ(row[0], "1");
    EXPECT_EQ(std::stod(row[3]), 0.25);
    EXPECT_NEAR(std::stod(row[1]), 2 * std::log(2.0), 1e-13);
}

TEST(Cli, SeventeenDigits) {
    const auto row = split(lines(run("constants --n 1").out)[4]);
    // 2 log 2 printed losslessly
    EXPECT_EQ(row[1].size() - row[1].find('.') - 1, 16u);
}

TEST(Cli, BadDimensionIsUsageError) {
    std::string err;
    const auto r = run("constants --n 0", &err);
    EXPECT_NE(r.code, 0);
    EXPECT_TRUE(r.out.empty());
    const auto j = nlohmann::json::parse(lines(err).at(0));
    EXPECT_EQ(j["error"], "usage");
}

TEST(Cli, CollapseIntervalLength) {
    const auto r = run("collapse --n 1 --beta 0.1,0.05,0.02 --grid 5");
    ASSERT_EQ(r.code, 0);
    bool found = false;
    for (const auto& l : lines(r.out)) {
        const auto c = split(l);
        if (c.size() > 4 && c[1] == "interval_length") {
            found = true;
            EXPECT_NEAR(std::stod(c[4]), M_PI / 2, 1e-8);
        }
    }
    EXPECT_TRUE(found);
}

TEST(Cli, EmptyBetaListRejected) {
    std::string err;
    const auto r = run("collapse --n 1 --beta ,", &err);
    EXPECT_NE(r.code, 0);
    EXPECT_NE(err.find("\"usage\""), std::string::npos);
}

TEST(Cli, SchauderDeterministic) {
    const std::string args = "schauder --seed 7 --beta 0.25,0.1,0.05 --grid 3";
    const auto a = run(args + " --jobs 1"), b = run(args + " --jobs 2");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_GT(lines(a.out).size(), 5u);
}

TEST(Cli, JsonFormat) {
    const auto r = run("constants --n 3 --format json");
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["schema"], "constants/1");
    EXPECT_EQ(j["rows"].size(), 1u);
    EXPECT_EQ(j["rows"][0][0], 3);
}

TEST(Cli, ConfigEchoRoundTrips) {
    const auto a = run("glue --n 2 --beta 0.1,0.05,0.02 --mu 0.7");
    ASSERT_EQ(a.code, 0);
    const std::string cfg = lines(a.out)[2].substr(std::string("# config=").size());
    const std::string path = ::testing::TempDir() + "conelab_cfg.json";
    std::ofstream(path) << cfg;
    const auto b = run("glue --config " + path);
    ASSERT_EQ(b.code, 0);
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, FlagsOverrideConfig) {
    const std::string path = ::testing::TempDir() + "conelab_cfg2.json";
    std::ofstream(path) << R"({"n": [1, 2, 3]})";
    const auto r = run("constants --config " + path + " --n 2");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(lines(r.out).size(), 5u);
}

TEST(Cli, OutputFile) {
    const std::string path = ::testing::TempDir() + "conelab_out.csv";
    const auto r = run("constants --n 1 --out " + path);
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    EXPECT_EQ(first, "# schema=constants/1");
}

TEST(Cli, SuitesListed) {
    const auto r = run("suites");
    ASSERT_EQ(r.code, 0);
    EXPECT_GE(lines(r.out).size() - 4, 8u);
}

TEST(Cli, VerifyExpansionsPasses) {
    const auto r = run("verify expansions");
    EXPECT_EQ(r.code, 0);
    const auto row = split(lines(r.out).at(4));
    EXPECT_EQ(row[1], "expansions");
    EXPECT_EQ(row[2], "1");
}

TEST(Cli, VerifyUnknownSuite) {
    std::string err;
    const auto r = run("verify nonsense", &err);
    EXPECT_NE(r.code, 0);
    EXPECT_NE(err.find("unknown suite"), std::string::npos);
}

TEST(Cli, UnknownCommand) {
    EXPECT_NE(run("frobnicate").code, 0);
}
