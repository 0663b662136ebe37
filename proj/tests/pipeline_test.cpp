// Copyright 2026 The iontk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "iontk/io.hpp"
#include "iontk/pipeline.hpp"
#include "iontk/report.hpp"

using namespace iontk;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = run_pipeline(args, out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() /
               ("iontk_cli_" + std::string(::testing::UnitTest::GetInstance()
                                                ->current_test_info()
                                                ->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string &name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

} // namespace

TEST_F(Cli, SimulateThenFitHeating)
{
    auto sim = run({"--seed", "7", "--out-dir", path("a"), "simulate", "heating", "--rate", "780"});
    ASSERT_EQ(sim.code, 0) << sim.err;
    auto fit = run({"fit-heating", "--input", path("a/heating.table.csv")});
    ASSERT_EQ(fit.code, 0) << fit.err;
    const auto r = report_from_json(fit.out);
    EXPECT_EQ(r.parameters[0].name, "ndot");
    EXPECT_LT(std::abs(r.parameters[0].value - 780), 3 * r.parameters[0].error);
    EXPECT_EQ(r.provenance.input_digest, sha256_hex(read_file(path("a/heating.table.csv"))));
}

TEST_F(Cli, Thermometry)
{
    auto t = run({"thermometry", "--p-red", "0.075", "--p-blue", "0.75", "--shots", "400"});
    ASSERT_EQ(t.code, 0) << t.err;
    const auto r = report_from_json(t.out);
    EXPECT_NEAR(r.parameters[0].value, 1.0 / 9.0, 1e-12);
    EXPECT_GT(r.parameters[0].error, 0);
}

TEST_F(Cli, ChargingPipeline)
{
    ASSERT_EQ(run({"--seed", "3", "--out-dir", path("c"), "simulate", "charging"}).code, 0);
    auto fit = run({"--out-dir", path("c"), "fit-charging", "--t-on", "400", "--input",
                    path("c/charging.table.csv")});
    ASSERT_EQ(fit.code, 0) << fit.err;
    const auto r = report_from_json(read_file(path("c/fit-charging.report.json")));
    bool has_offset = false;
    for (const auto &p : r.parameters)
        if (p.name == "settled_offset") {
            has_offset = true;
            EXPECT_NEAR(p.value, 101e3, 3e3);
        }
    EXPECT_TRUE(has_offset);
    const auto table = read_file(path("c/fit-charging.table.csv"));
    EXPECT_EQ(table.rfind("time:s,freq:Hz,model:Hz,residual:Hz\n", 0), 0u);

    auto dis = run({"fit-discharge", "--input", path("c/charging.table.csv")});
    ASSERT_EQ(dis.code, 0) << dis.err;
    EXPECT_NE(dis.out.find("weak:T4"), std::string::npos);
}

TEST_F(Cli, BeamProfileAndNormalize)
{
    ASSERT_EQ(run({"--seed", "1", "--out-dir", path("b"), "simulate", "position", "--origin",
                   "loading_hole", "--phase", "3.141592653589793"})
                  .code,
              0);
    auto fit = run({"beam-profile", "--input", path("b/position.table.csv")});
    ASSERT_EQ(fit.code, 0) << fit.err;
    const auto r = report_from_json(fit.out);
    EXPECT_NEAR(r.statistics.at("peak_separation"), 1.8588e-6, 0.2e-6);
    EXPECT_EQ(r.notes.at("origin_declared"), "loading_hole");

    auto n = run({"normalize", "--rate", "780"});
    ASSERT_EQ(n.code, 0) << n.err;
    EXPECT_NEAR(report_from_json(n.out).parameters[1].value / 94746.13378348174, 1, 1e-12);

    auto p = run({"normalize", "--point", "2.5,100", "--point", "4,35.58", "--point", "5,25"});
    ASSERT_EQ(p.code, 0) << p.err;
    EXPECT_EQ(report_from_json(p.out).model, "power-law");
}

TEST_F(Cli, ReportsAreByteIdentical)
{
    for (const char *sub : {"x", "y"})
        ASSERT_EQ(run({"--seed", "11", "--out-dir", path(sub), "simulate", "charging"}).code, 0);
    EXPECT_EQ(read_file(path("x/charging.table.csv")), read_file(path("y/charging.table.csv")));
    EXPECT_EQ(read_file(path("x/charging.report.json")),
              read_file(path("y/charging.report.json")));
    auto a = run({"--seed", "11", "fit-charging", "--input", path("x/charging.table.csv")});
    auto b = run({"--seed", "11", "fit-charging", "--input", path("y/charging.table.csv")});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
}

TEST_F(Cli, ReportCommandReemits)
{
    ASSERT_EQ(run({"--out-dir", path("r"), "thermometry", "--p-red", "0.1", "--p-blue", "0.5",
                   "--shots", "100"})
                  .code,
              0);
    const auto original = read_file(path("r/thermometry.report.json"));
    auto again = run({"report", "--input", path("r/thermometry.report.json")});
    ASSERT_EQ(again.code, 0) << again.err;
    EXPECT_EQ(again.out, original);
    auto table = run({"--format", "table", "report", "--input",
                      path("r/thermometry.report.json")});
    EXPECT_EQ(table.out.rfind("name,unit,value,error,weak\nnbar,", 0), 0u);
}

TEST_F(Cli, ExitCodes)
{
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"fit-heating"}).code, 2);
    EXPECT_EQ(run({"thermometry", "--p-red", "0.5", "--p-blue", "0.4", "--shots", "10"}).code, 2);
    auto io = run({"fit-heating", "--input", path("missing.csv")});
    EXPECT_EQ(io.code, 4);
    EXPECT_EQ(io.err.rfind("{\"error\":{\"code\":4,\"kind\":\"io\"", 0), 0u) << io.err;
    EXPECT_EQ(run({"--config", path("missing.json"), "normalize", "--rate", "1"}).code, 4);

    write_file_atomic(path("bad.csv"), "time:s, nbar\n0, 0.1\n2, 0.3\n1, 0.2\n");
    auto bad = run({"fit-heating", "--input", path("bad.csv")});
    EXPECT_EQ(bad.code, 2);
    EXPECT_NE(bad.err.find("non-monotonic"), std::string::npos);

    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, ConfigOverrides)
{
    write_file_atomic(path("cfg.json"),
                      R"({"species": {"Sr-88": {"mass_u": 87.906}},
                          "trap": {"species": "Sr-88", "axial_mhz": 1.0}})");
    auto r = run({"--config", path("cfg.json"), "normalize", "--rate", "100", "--ref-species",
                  "Sr-88", "--ref-axial-mhz", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(report_from_json(r.out).parameters[1].value, 100, 1e-9);

    write_file_atomic(path("typo.json"), R"({"trapp": {}})");
    EXPECT_EQ(run({"--config", path("typo.json"), "normalize", "--rate", "1"}).code, 2);
}
