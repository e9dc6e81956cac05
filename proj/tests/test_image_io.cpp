#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "ttvos/errors.hpp"
#include "ttvos/image_io.hpp"

using namespace ttvos;
namespace fs = std::filesystem;

TEST(ImageIo, PpmRoundTripIsByteExact) {
  const fs::path p = fs::temp_directory_path() / "ttvos_io.ppm";
  Tensor img({3, 5, 7});
  for (std::size_t i = 0; i < img.numel(); ++i) img.mutable_data()[i] = double((i * 37) % 256) / 255.0;
  write_ppm(p, img);
  EXPECT_EQ(fs::file_size(p), std::string("P6\n7 5\n255\n").size() + 105);
  Tensor back = read_ppm(p);
  EXPECT_EQ(back.shape(), img.shape());
  EXPECT_LT(oracle::max_abs_diff(back, img), 1e-12);
  fs::remove(p);
}

TEST(ImageIo, PpmClampsAndRounds) {
  const fs::path p = fs::temp_directory_path() / "ttvos_io_clamp.ppm";
  write_ppm(p, Tensor({3, 1, 2}, std::vector<double>{-1, 2, 0.5, 0.5, 0.1, 0.9}));
  Tensor back = read_ppm(p);
  EXPECT_EQ(back[0], 0.0);
  EXPECT_EQ(back[1], 1.0);
  EXPECT_EQ(back[2], 128.0 / 255);
  fs::remove(p);
}

TEST(ImageIo, PgmRoundTrip) {
  const fs::path p = fs::temp_directory_path() / "ttvos_io.pgm";
  LabelMap m(4, 6);
  for (std::size_t i = 0; i < m.size(); ++i) m.labels[i] = int(i % 4);
  write_pgm(p, m);
  EXPECT_EQ(read_pgm(p), m);
  fs::remove(p);
}

TEST(ImageIo, CommentsInHeadersAreSkipped) {
  const fs::path p = fs::temp_directory_path() / "ttvos_io_comment.pgm";
  {
    std::ofstream out(p, std::ios::binary);
    out << "P5\n# made by hand\n3 1\n255\n";
    out.put(0).put(1).put(2);
  }
  LabelMap m = read_pgm(p);
  EXPECT_EQ(m.labels, (std::vector<int>{0, 1, 2}));
  fs::remove(p);
}

TEST(ImageIo, Errors) {
  const fs::path dir = fs::temp_directory_path();
  EXPECT_THROW(read_ppm(dir / "ttvos_missing.ppm"), IoError);
  const fs::path p = dir / "ttvos_io_bad.pgm";
  std::ofstream(p, std::ios::binary) << "P6\n2 2\n255\n";
  EXPECT_THROW(read_pgm(p), IoError);
  std::ofstream(p, std::ios::binary) << "P5\n2 2\n255\nab";
  EXPECT_THROW(read_pgm(p), IoError);
  fs::remove(p);
  EXPECT_THROW(write_pgm(p, [] { LabelMap m(1, 1); m.labels[0] = 300; return m; }()), InputError);
}
