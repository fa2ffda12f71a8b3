#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "selfsim/field_io.hpp"

using namespace selfsim;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("selfsim_io_" + std::to_string(::getpid()) + "_" + name);
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Internal;
}

}  // namespace

TEST(F2D, RandomRoundTripIsByteIdentical) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> N(0.0, 1e3);
  Grid2D g(-0.1, 0.3, 1.0 / 3.0, 2.0, 5, 4);
  ScalarField f(g);
  for (auto& v : f.values()) v = N(rng);
  const auto p1 = temp_path("a.f2d"), p2 = temp_path("b.f2d");
  write_field(f, p1);
  auto back = read_scalar_field(p1);
  EXPECT_EQ(back.values(), f.values());
  EXPECT_TRUE(back.grid() == g);
  write_field(back, p2);
  EXPECT_EQ(read_text(p1), read_text(p2));

  VectorField V(f, 2.0 * f);
  write_field(V, p1);
  auto Vb = read_vector_field(p1);
  EXPECT_EQ(Vb.v.values(), V.v.values());
  fs::remove(p1);
  fs::remove(p2);
}

TEST(F2D, HeaderAndComments) {
  auto f = parse_f2d("# leading comment\nF2D 3 3 0 1 0 1 scalar\n1\n2\n3 # tail\n4\n5\n\n6\n7\n8\n9\n");
  const auto& s = std::get<ScalarField>(f);
  EXPECT_EQ(s.grid().nx(), 3);
  EXPECT_DOUBLE_EQ(s.grid().hx(), 0.5);
  EXPECT_EQ(s(2, 2), 9.0);
  EXPECT_EQ(s(1, 0), 2.0);
}

TEST(F2D, Errors) {
  EXPECT_EQ(kind_of([] { parse_f2d("F2D 3 3 0 1 0 1 scalar\n1\n2\n3\n4\n5\n6\n7\n8\n"); }),
            ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind_of([] { parse_f2d("F2X 3 3 0 1 0 1 scalar\n"); }), ErrorKind::Format);
  EXPECT_EQ(kind_of([] { parse_f2d("F2D 3 3 0 1 0 1 tensor\n"); }), ErrorKind::Format);
  try {
    parse_f2d("F2D 3 3 0 1 0 1 scalar\n1\n2\nabc\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Format);
    EXPECT_NE(std::string(e.what()).find(":4:"), std::string::npos);
  }
  EXPECT_EQ(kind_of([] { read_field("/nonexistent/dir/x.f2d"); }), ErrorKind::Io);
  EXPECT_EQ(kind_of([] { write_field(ScalarField(Grid2D(0, 1, 0, 1, 3, 3)), "/nonexistent/dir/x.f2d"); }),
            ErrorKind::Io);
}
