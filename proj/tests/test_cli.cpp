// SPDX-License-Identifier: Apache-2.0
#include "upright/image.hpp"
#include "upright/lut.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace upright;

namespace {

const fs::path kDir = fs::temp_directory_path() / "upright_test_cli";

struct CliRun {
    int code;
    std::string out;
};

CliRun cli(const std::string& args) {
    const fs::path log = kDir / "out.txt";
    const std::string cmd = std::string("\"") + UPRIGHT_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::ostringstream s;
    s << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, s.str()};
}

std::string p(const std::string& name) { return "\"" + (kDir / name).string() + "\""; }

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        fs::remove_all(kDir);
        fs::create_directories(kDir);
    }
    static void TearDownTestSuite() { fs::remove_all(kDir); }
};

}  // namespace

TEST_F(Cli, HelpAndUsageErrors) {
    const CliRun help = cli("--help");
    EXPECT_EQ(help.code, 0);
    for (const char* sub : {"lut", "remap", "adjust", "data", "train", "eval", "bench", "e2e"})
        EXPECT_NE(help.out.find(sub), std::string::npos) << sub;
    const CliRun train_help = cli("train --help");
    EXPECT_EQ(train_help.code, 0);
    for (const char* flag : {"--stage", "--data", "--config", "--ckpt"})
        EXPECT_NE(train_help.out.find(flag), std::string::npos) << flag;
    EXPECT_EQ(cli("").code, 2);
    EXPECT_EQ(cli("adjust --in x.ppm --out y.ppm --bogus 1").code, 2);
    EXPECT_EQ(cli("lut gen --pitch 91 --out " + p("x.ulut")).code, 2);
    EXPECT_EQ(cli("lut gen --size 64x100 --out " + p("x.ulut")).code, 2);
    EXPECT_EQ(cli("bench --frames 5").code, 2);
}

TEST_F(Cli, DataErrorsExitThree) {
    EXPECT_EQ(cli("adjust --in " + p("missing.ppm") + " --out " + p("y.ppm")).code, 3);
    EXPECT_EQ(cli("eval --oracle --data " + p("nodata")).code, 3);
    std::ofstream(kDir / "junk.ulut") << "not a lut";
    EXPECT_EQ(cli("remap --in " + p("missing.ppm") + " --lut " + p("junk.ulut") + " --out " + p("y.ppm")).code, 3);
}

TEST_F(Cli, GridReportCountsEntries) {
    const CliRun r = cli("lut grid --range -90:90 --step 1 --size 256x512");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("32761 entries"), std::string::npos);
    EXPECT_NE(r.out.find("4.65 GB"), std::string::npos);
    ASSERT_EQ(cli("lut grid --range -2:2 --step 2 --size 8x16 --out " + p("grid")).code, 0);
    int files = 0;
    for (const auto& e : fs::directory_iterator(kDir / "grid")) files += e.path().extension() == ".ulut";
    EXPECT_EQ(files, 9);
    EXPECT_TRUE(load_lut(kDir / "grid" / "lut_p-002_r+002.ulut").angles() == TiltAngles(-2, 2));
}

TEST_F(Cli, LutGenMatchesLibraryAndAdjustZeroIsIdentity) {
    ASSERT_EQ(cli("lut gen --pitch 12 --roll -40 --size 32x64 --dir fwd --out " + p("g.ulut")).code, 0);
    EXPECT_TRUE(load_lut(kDir / "g.ulut") == generate_lut({12, -40}, EquirectGrid(32, 64), LutDirection::ForwardTilt));

    Image img(3, EquirectGrid(32, 64));
    for (std::size_t i = 0; i < img.data().size(); ++i) img.data()[i] = static_cast<float>((i * 7919) % 1000) / 1000.0f;
    write_uimg(img, kDir / "in.uimg");
    ASSERT_EQ(cli("adjust --in " + p("in.uimg") + " --pitch 0 --roll 0 --out " + p("out.uimg")).code, 0);
    const Image out = read_uimg(kDir / "out.uimg");
    for (std::size_t i = 0; i < img.data().size(); ++i) ASSERT_NEAR(out.data()[i], img.data()[i], 1e-6);
}

TEST_F(Cli, OracleEvalIsPerfect) {
    ASSERT_EQ(cli("data synth --n 12 --seed 2 --out " + p("ds")).code, 0);
    const CliRun r = cli("eval --oracle --split all --data " + p("ds"));
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("100.0   100.0   100.0   100.0   100.0   100.0"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("12 records"), std::string::npos);
}

TEST_F(Cli, LaterStagesNeedEarlierCheckpoints) {
    ASSERT_EQ(cli("data synth --n 12 --seed 3 --out " + p("ds3")).code, 0);
    const CliRun r = cli("train --stage recon --data " + p("ds3") + " --ckpt " + p("ck3"));
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.out.find("orientation"), std::string::npos);
    std::ofstream(kDir / "bad.cfg") << "stepz=3\n";
    EXPECT_EQ(cli("train --stage orientation --data " + p("ds3") + " --config " + p("bad.cfg") + " --ckpt " + p("ck3")).code, 2);
}
