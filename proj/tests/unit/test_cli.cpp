#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hybridssr/cli.hpp"

namespace fs = std::filesystem;
using namespace hybridssr;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "hybridssr");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(int(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
   protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("hybridssr_cli_" + std::string(
                                       ::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write(const std::string& name, const std::string& text) {
        const auto p = dir_ / name;
        std::ofstream(p, std::ios::binary) << text;
        return p.string();
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    static std::string slurp(const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), {}};
    }

    fs::path dir_;
};

const char* kWorked =
    "id,study,arm,y,e\n"
    "t1,1,1,10,0.5\n"
    "t2,1,1,12,0.5\n"
    "c1,1,0,9,0.5\n"
    "h1,0,0,8,0.6\n"
    "h2,0,0,7,0.4\n";

}  // namespace

TEST_F(CliTest, Strategy2OnOutcomeFreeFile) {
    std::string text = "id,study,arm,y,x1\n";
    for (int i = 0; i < 12; ++i)
        text += "c" + std::to_string(i) + ",1,,," + std::to_string(70 + i % 5) + "\n";
    for (int i = 0; i < 9; ++i)
        text += "h" + std::to_string(i) + ",0,0,," + std::to_string(68 + i % 7) + "\n";
    const auto r = cli({"ssr", "--data", write("blind.csv", text), "--strategy", "2"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("\n2,"), std::string::npos) << r.out;

    const auto s1 = cli({"ssr", "--data", path("blind.csv"), "--strategy", "1"});
    EXPECT_EQ(s1.code, 1);
    EXPECT_EQ(s1.err.rfind("E:1:", 0), 0u);
}

TEST_F(CliTest, TestOnWorkedExample) {
    const auto r = cli({"test", "--data", write("w.csv", kWorked), "--tau0", "0",
                        "--propensity-column", "e"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto row = r.out.substr(r.out.find('\n') + 1);
    EXPECT_EQ(row.rfind("11.00000,7.27778,", 0), 0u) << r.out;
    EXPECT_NE(row.find(",3.29637,"), std::string::npos) << r.out;
}

TEST_F(CliTest, SimulateIsByteIdentical) {
    const auto cfg = write("c.json", R"({"scenario.ids": [1, 5], "sim.reps": 6})");
    const auto a = cli({"simulate", "--config", cfg, "--seed", "11", "--out", path("a.csv"),
                        "--threads", "1"});
    const auto b = cli({"simulate", "--config", cfg, "--seed", "11", "--out", path("b.csv"),
                        "--threads", "4"});
    ASSERT_EQ(a.code, 0) << a.err;
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_FALSE(slurp(path("a.csv")).empty());
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
}

TEST_F(CliTest, SimulateNeedsSeed) {
    const auto r = cli({"simulate", "--reps", "2"});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(r.err.rfind("E:1:", 0), 0u);
}

TEST_F(CliTest, NumericalErrorsExitTwo) {
    const auto r = cli({"test", "--data",
                        write("flat.csv", "id,study,arm,y,e\nt1,1,1,0,0.5\nt2,1,1,0,0.5\n"
                                          "c1,1,0,0,0.5\nh1,0,0,0,0.5\n"),
                        "--propensity-column", "e"});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.err.rfind("E:2:", 0), 0u);
}

TEST_F(CliTest, PlanWeightsSummarize) {
    const auto plan = cli({"plan", "--sigma", "13"});
    ASSERT_EQ(plan.code, 0);
    EXPECT_NE(plan.out.find(",217"), std::string::npos);

    const auto data = write("w.csv", kWorked);
    const auto w = cli({"weights", "--data", data, "--propensity-column", "e", "--out",
                        path("w_out.csv")});
    ASSERT_EQ(w.code, 0) << w.err;
    EXPECT_EQ(w.out.rfind("quantity,study,n,min,q1,median,q3,max\n", 0), 0u);
    EXPECT_EQ(slurp(path("w_out.csv")).rfind("id,study,e,w_r0,w_r1\n", 0), 0u);

    const auto s = cli({"summarize", "--data", data, "--masked"});
    ASSERT_EQ(s.code, 0) << s.err;
    EXPECT_EQ(s.out.find("current treated"), std::string::npos);
}

TEST_F(CliTest, BadDataIsValidationError) {
    const auto r = cli({"test", "--data", write("bad.csv", "id,study,arm,y,e\nh,0,1,3,0.5\n")});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(r.err.rfind("E:1:", 0), 0u);
}
