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


#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "iontk/errors.hpp"
#include "iontk/io.hpp"
#include "iontk/report.hpp"

using namespace iontk;

namespace {

FitReport sample()
{
    FitReport r;
    r.model = "two-exponential-charging";
    r.parameters = {{"T1", 21.000000000000004, 0.27, "s", false},
                    {"T4", 1.7e4, std::numeric_limits<double>::infinity(), "s", true},
                    {"x", std::nan(""), -0.0, "", false}};
    r.residual_rms = 1003.25;
    r.flags = {"weak:T4", "covariance_singular"};
    r.provenance.input_digest = sha256_hex("abc");
    r.provenance.seed = 18446744073709551615ull;
    r.statistics = {{"chi2", 155.1}, {"dof", 150}};
    r.notes = {{"origin", "grating"}};
    return r;
}

} // namespace

TEST(Report, RoundTripIsLossless)
{
    const auto r = sample();
    const auto text = to_json(r);
    const auto back = report_from_json(text);
    EXPECT_EQ(back, r);
    EXPECT_EQ(to_json(back), text);
}

TEST(Report, StableKeyOrder)
{
    const auto text = to_json(sample());
    EXPECT_LT(text.find("\"flags\""), text.find("\"model\""));
    EXPECT_LT(text.find("\"model\""), text.find("\"notes\""));
    EXPECT_NE(text.find("\"inf\""), std::string::npos);
    EXPECT_NE(text.find("\"nan\""), std::string::npos);
}

TEST(Report, RejectsMalformed)
{
    EXPECT_THROW(report_from_json("{"), ValidationError);
    EXPECT_THROW(report_from_json("{}"), ValidationError);
    EXPECT_THROW(report_from_json(R"({"model": 3})"), ValidationError);
}

TEST(Io, Sha256KnownVector)
{
    EXPECT_EQ(sha256_hex("abc"),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex(""),
              "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Io, FormatDoubleRoundTrips)
{
    for (double v : {0.1, 1.0 / 3.0, 5.329e6, -2.5e-300, 123456789.123456789})
        EXPECT_EQ(std::stod(format_double(v)), v);
    EXPECT_EQ(format_double(std::nan("")), "nan");
    EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Io, AtomicWriteReplaces)
{
    const auto dir = std::filesystem::temp_directory_path() / "iontk_io_test" / "nested";
    const auto path = dir / "f.txt";
    write_file_atomic(path, "one");
    write_file_atomic(path, "two");
    EXPECT_EQ(read_file(path), "two");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto &e : std::filesystem::directory_iterator(dir))
        ++files;
    EXPECT_EQ(files, 1u);
    std::filesystem::remove_all(dir.parent_path());
    EXPECT_THROW(read_file(path), IoError);
}
