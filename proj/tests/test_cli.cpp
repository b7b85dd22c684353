#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "srvc/model_stream.hpp"
#include "srvc/pipeline.hpp"
#include "srvc/video_io.hpp"
#include "test_util.hpp"

using namespace srvc;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("srvc_cli_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    VideoSequence v = fixtures::moving_texture(8, 16, 16, 4.0);
    write_raw_video(root_ / "clip.rgb", v);
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static CliResult run(const std::string& args, const std::string& env = "") {
    const fs::path err = root_ / "stderr.txt";
    const std::string cmd = env + " " + SRVC_CLI_PATH + " " + args + " 2> " + err.string();
    CliResult r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    std::array<char, 4096> buf{};
    for (std::size_t n; (n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0;) r.out.append(buf.data(), n);
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(err);
    r.err.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    return r;
  }

  static std::string small_flags() {
    return " -F 2 -P 4 -k 2 --gen-hidden 3 --reg-hidden 4 --epochs 1 --initial-epochs 1 --eta 0.05 ";
  }

  static std::string encode_to(const std::string& name, const std::string& extra = "") {
    const fs::path out = root_ / name;
    const CliResult r = run("encode -i " + (root_ / "clip.rgb").string() + " -o " + out.string() + small_flags() + extra);
    EXPECT_EQ(r.code, 0) << r.err;
    return out.string();
  }

  static std::vector<std::uint8_t> bytes_of(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }

  static fs::path root_;
};

fs::path CliTest::root_;

}  // namespace

TEST_F(CliTest, MissingInputIsUsageError) {
  const CliResult r = run("encode -o " + (root_ / "nowhere").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--input"), std::string::npos);
  EXPECT_NE(r.err.find("Usage"), std::string::npos) << r.err;
}

TEST_F(CliTest, UnknownFlagRejected) {
  EXPECT_EQ(run("encode --bogus 3 -i a -o b").code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST_F(CliTest, InvalidTauRejected) {
  const CliResult r = run("encode -i " + (root_ / "clip.rgb").string() + " -o " + (root_ / "x").string() + " --tau -1");
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(root_ / "x"));
}

TEST_F(CliTest, EncodeWritesThreeFiles) {
  const fs::path out = encode_to("enc");
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(out)) files += e.is_regular_file();
  EXPECT_EQ(files, 3u);
  EXPECT_TRUE(fs::exists(out / kContentFile));
  EXPECT_TRUE(fs::exists(out / kModelFile));
  EXPECT_TRUE(fs::exists(out / kManifestFile));
}

TEST_F(CliTest, EncodeIsIdempotent) {
  const fs::path a = encode_to("idem_a"), b = encode_to("idem_b");
  for (const char* f : {kContentFile, kModelFile, kManifestFile}) EXPECT_EQ(bytes_of(a / f), bytes_of(b / f)) << f;
}

TEST_F(CliTest, OneShotHasZeroUpdateRecords) {
  const fs::path out = encode_to("oneshot", "--tau inf");
  EXPECT_TRUE(read_stream_file(out / kModelFile).updates.empty());
  const CliResult r = run("inspect -i " + out.string());
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("updates         0"), std::string::npos) << r.out;
}

TEST_F(CliTest, InspectListsUpdates) {
  const fs::path out = encode_to("two", "--tau 1");  // 8 frames at 4 fps
  const CliResult r = run("inspect -i " + (out / kModelFile).string());
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("updates         2"), std::string::npos) << r.out;
  const std::size_t m = param_count(ModelConfig{2, 4, 2, 3, 4});
  const std::string count = std::to_string(selection_count(m, 0.05));
  std::size_t rows = 0;
  std::istringstream lines(r.out);
  for (std::string line; std::getline(lines, line);) {
    std::istringstream f(line);
    std::string rec, seg, cnt;
    f >> rec >> seg >> cnt;
    if ((rec == "1" || rec == "2") && cnt == count) ++rows;
  }
  EXPECT_EQ(rows, 2u) << r.out;
}

TEST_F(CliTest, DecodeRoundTripAndRange) {
  const fs::path enc = encode_to("dec");
  const fs::path all = root_ / "dec_all", part = root_ / "dec_part";
  ASSERT_EQ(run("decode -i " + enc.string() + " -o " + all.string()).code, 0);
  EXPECT_EQ(read_image_sequence(all, 4.0).frame_count(), 8u);
  ASSERT_EQ(run("decode -i " + enc.string() + " -o " + part.string() + " --frames 0:3").code, 0);
  const VideoSequence p = read_image_sequence(part, 4.0);
  EXPECT_EQ(p.frame_count(), 3u);
  EXPECT_EQ(p.height(), 16);
  EXPECT_EQ(run("decode -i " + enc.string() + " -o " + part.string() + " --frames 3:1").code, 2);
}

TEST_F(CliTest, CorruptModelIsExitFive) {
  const fs::path enc = encode_to("corrupt", "--tau 1");
  auto bytes = bytes_of(enc / kModelFile);
  {
    auto bad = bytes;
    bad[0] ^= 0xFF;
    std::ofstream(enc / kModelFile, std::ios::binary).write(reinterpret_cast<const char*>(bad.data()), bad.size());
    const CliResult r = run("decode -i " + enc.string() + " -o " + (root_ / "corrupt_out").string());
    EXPECT_EQ(r.code, 5) << r.err;
  }
  {
    bytes.resize(bytes.size() - 1);
    std::ofstream(enc / kModelFile, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    const CliResult r = run("decode -i " + enc.string() + " -o " + (root_ / "corrupt_out").string());
    EXPECT_EQ(r.code, 5);
    EXPECT_NE(r.err.find("update record 2"), std::string::npos) << r.err;
  }
}

TEST_F(CliTest, EvalAgainstItselfIsCapped) {
  const CliResult r = run("eval -r " + (root_ / "clip.rgb").string() + " -i " + (root_ / "clip.rgb").string() + " --csv " +
                    (root_ / "eval.csv").string());
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("99.0000 dB"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(root_ / "eval.csv"));
}

TEST_F(CliTest, SweepRowCounts) {
  const fs::path csv = root_ / "rd.csv";
  const CliResult r = run("sweep -i " + (root_ / "clip.rgb").string() + " -o " + csv.string() + small_flags() +
                    "--codec quant --qualities 8,32 --etas 0.05,0.2 --taus 2");
  EXPECT_EQ(r.code, 0) << r.err;
  std::ifstream in(csv);
  std::size_t rows = 0, srvc_rows = 0;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    ++rows;
    srvc_rows += line.rfind("srvc,", 0) == 0;
  }
  EXPECT_EQ(srvc_rows, 4u);
  EXPECT_EQ(rows, 12u);
}

TEST_F(CliTest, ConfigFileWithFlagPrecedence) {
  const fs::path cfg = root_ / "job.cfg";
  std::ofstream(cfg) << "# tiny job\nfeature-channels=2\npatch=4\nscale=2\ngen-hidden=3\nreg-hidden=4\n"
                        "epochs=1\ninitial-epochs=1\neta=0.5\ntau=1\n";
  const fs::path out = root_ / "cfg_out";
  const CliResult r = run("encode -i " + (root_ / "clip.rgb").string() + " -o " + out.string() + " --config " +
                    cfg.string() + " --eta 0.05");
  ASSERT_EQ(r.code, 0) << r.err;
  const ModelStreamFile f = read_stream_file(out / kModelFile);
  EXPECT_EQ(f.header.config, (ModelConfig{2, 4, 2, 3, 4}));
  ASSERT_EQ(f.updates.size(), 2u);
  EXPECT_EQ(f.updates[0].size(), selection_count(f.header.param_count, 0.05));

  std::ofstream(root_ / "bad.cfg") << "no-such-key=1\n";
  EXPECT_EQ(run("encode -i a -o b --config " + (root_ / "bad.cfg").string()).code, 2);
}

TEST_F(CliTest, CodecFailureIsExitThree) {
  const CliResult r = run("encode -i " + (root_ / "clip.rgb").string() + " -o " + (root_ / "ext").string() + small_flags() +
                        "--codec external",
                    "SRVC_ENCODER=false");
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_FALSE(fs::exists(root_ / "ext"));
}

TEST_F(CliTest, BenchRuns) {
  const CliResult r = run("bench -F 4 -P 4 -k 2 --gen-hidden 8 --reg-hidden 8 --height 16 --width 16 --repetitions 10");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("median forward time"), std::string::npos);
}
