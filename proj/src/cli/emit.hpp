#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddim/spectral.hpp"

namespace ddim::cli {

/// Formats a double with 17 significant digits.
std::string num17(double x);

/// Ordered sink for every file a command writes. Paths are relative to the
/// output directory, which is created on first use.
class Emitter {
 public:
  explicit Emitter(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void csv(const std::string& name, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows);
  void json(const std::string& name, const nlohmann::json& doc);
  void text(const std::string& name, const std::string& body);

  const std::vector<std::filesystem::path>& written() const noexcept { return written_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> written_;
};

std::vector<std::string> region_header();
std::vector<std::vector<std::string>> region_rows(const RegionGrid& g);

struct Segment {
  double x0, y0, x1, y1;
};

/// Zero level set of a field sampled on an nx-by-ny lattice (values[i*nx+j]
/// at x = xs[j], y = ys[i]) as line segments, by marching squares.
std::vector<Segment> zero_contour(const std::vector<double>& xs, const std::vector<double>& ys,
                                  const std::vector<double>& values);

/// 800x600 region map: j1 and j2 cells filled, the lambda1 + lambda2 = 0
/// curve drawn on top.
std::string region_svg(const RegionGrid& g, bool timestamp);

}  // namespace ddim::cli
