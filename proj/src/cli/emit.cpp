#include "cli/emit.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fmt/chrono.h>
#include <fmt/format.h>

namespace ddim::cli {

std::string num17(double x) { return fmt::format("{:.17g}", x); }

namespace {

void write_file(const std::filesystem::path& p, const std::string& body) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << body;
  if (!out) throw std::runtime_error("write failed for " + p.string());
}

}  // namespace

void Emitter::csv(const std::string& name, const std::vector<std::string>& header,
                  const std::vector<std::vector<std::string>>& rows) {
  std::string body = fmt::format("{}\n", fmt::join(header, ","));
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw std::logic_error("csv row width differs from header");
    body += fmt::format("{}\n", fmt::join(r, ","));
  }
  text(name, body);
}

void Emitter::json(const std::string& name, const nlohmann::json& doc) {
  text(name, doc.dump(2) + "\n");
}

void Emitter::text(const std::string& name, const std::string& body) {
  const auto p = dir_ / name;
  write_file(p, body);
  written_.push_back(p);
}

std::vector<std::string> region_header() {
  return {"tau", "alpha", "verdict", "lambda_sum_sign", "nu", "margin"};
}

std::vector<std::vector<std::string>> region_rows(const RegionGrid& g) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(g.cells.size());
  for (int i = 0; i < g.resolution; ++i)
    for (int j = 0; j < g.resolution; ++j) {
      const ImVerdict& c = g.at(i, j);
      rows.push_back({num17(g.taus[j]), num17(g.alphas[i]), to_string(c.verdict),
                      std::to_string(c.lambda_sum_sign), num17(c.nu), num17(c.margin)});
    }
  return rows;
}

std::vector<Segment> zero_contour(const std::vector<double>& xs, const std::vector<double>& ys,
                                  const std::vector<double>& values) {
  const std::size_t nx = xs.size(), ny = ys.size();
  if (values.size() != nx * ny) throw std::invalid_argument("zero_contour: size mismatch");
  std::vector<Segment> out;
  auto v = [&](std::size_t i, std::size_t j) { return values[i * nx + j]; };
  for (std::size_t i = 0; i + 1 < ny; ++i)
    for (std::size_t j = 0; j + 1 < nx; ++j) {
      // Corners counter-clockwise from bottom-left.
      const double x[4] = {xs[j], xs[j + 1], xs[j + 1], xs[j]};
      const double y[4] = {ys[i], ys[i], ys[i + 1], ys[i + 1]};
      const double f[4] = {v(i, j), v(i, j + 1), v(i + 1, j + 1), v(i + 1, j)};
      if (!(std::isfinite(f[0]) && std::isfinite(f[1]) && std::isfinite(f[2]) &&
            std::isfinite(f[3])))
        continue;
      double px[4], py[4];
      int k = 0;
      for (int e = 0; e < 4; ++e) {
        const int a = e, b = (e + 1) % 4;
        if ((f[a] < 0.0) != (f[b] < 0.0)) {
          const double s = f[a] / (f[a] - f[b]);
          px[k] = x[a] + s * (x[b] - x[a]);
          py[k] = y[a] + s * (y[b] - y[a]);
          ++k;
        }
      }
      if (k == 2) {
        out.push_back({px[0], py[0], px[1], py[1]});
      } else if (k == 4) {
        // Saddle: decide the pairing by the sign at the cell centre.
        const double c = 0.25 * (f[0] + f[1] + f[2] + f[3]);
        if ((c < 0.0) == (f[0] < 0.0)) {
          out.push_back({px[0], py[0], px[1], py[1]});
          out.push_back({px[2], py[2], px[3], py[3]});
        } else {
          out.push_back({px[0], py[0], px[3], py[3]});
          out.push_back({px[1], py[1], px[2], py[2]});
        }
      }
    }
  return out;
}

std::string region_svg(const RegionGrid& g, bool timestamp) {
  constexpr double W = 800, H = 600, left = 70, right = 150, top = 30, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;
  auto sx = [&](double tau) { return left + (tau - g.tau.lo) / (g.tau.hi - g.tau.lo) * pw; };
  auto sy = [&](double a) { return top + (1.0 - (a - g.alpha.lo) / (g.alpha.hi - g.alpha.lo)) * ph; };
  const double cw = pw / g.resolution, ch = ph / g.resolution;

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\">\n",
      W, H);
  if (timestamp)
    s += fmt::format("<!-- generated {:%Y-%m-%dT%H:%M:%SZ} -->\n",
                     fmt::gmtime(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now())));
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<g shape-rendering=\"crispEdges\">\n";
  for (int i = 0; i < g.resolution; ++i)
    for (int j = 0; j < g.resolution; ++j) {
      const Verdict v = g.at(i, j).verdict;
      const char* fill = v == Verdict::J1   ? "#3b6fb6"
                         : v == Verdict::J2 ? "#f0a030"
                         : v == Verdict::Error ? "#c03030"
                                                : nullptr;
      if (!fill) continue;
      s += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n",
                       left + j * cw, top + (g.resolution - 1 - i) * ch, cw, ch, fill);
    }
  s += "</g>\n";

  std::vector<double> sum(g.cells.size());
  for (std::size_t c = 0; c < g.cells.size(); ++c) {
    const auto& cell = g.cells[c];
    sum[c] = cell.verdict == Verdict::Error ? NAN : cell.lambda1 + cell.lambda2;
  }
  s += "<g stroke=\"black\" stroke-width=\"2\" fill=\"none\">\n";
  for (const auto& seg : zero_contour(g.taus, g.alphas, sum))
    s += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\"/>\n", sx(seg.x0),
                     sy(seg.y0), sx(seg.x1), sy(seg.y1));
  s += "</g>\n";

  s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
                   left, top, pw, ph);
  s += "<g font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">\n";
  for (int k = 0; k <= 5; ++k) {
    const double tau = g.tau.lo + k * (g.tau.hi - g.tau.lo) / 5;
    const double a = g.alpha.lo + k * (g.alpha.hi - g.alpha.lo) / 5;
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{:.2f}</text>\n", sx(tau), top + ph + 18, tau);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.2f}</text>\n", left - 6,
                     sy(a) + 4, a);
  }
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">tau</text>\n", left + pw / 2, H - 15);
  s += fmt::format("<text x=\"20\" y=\"{:.2f}\" transform=\"rotate(-90 20 {:.2f})\">alpha</text>\n",
                   top + ph / 2, top + ph / 2);
  s += "</g>\n";

  const double lx = left + pw + 15;
  s += "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"14\" fill=\"#3b6fb6\"/>\n", lx, top);
  s += fmt::format("<text x=\"{}\" y=\"{}\">j = 1</text>\n", lx + 20, top + 12);
  s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"14\" fill=\"#f0a030\"/>\n", lx, top + 24);
  s += fmt::format("<text x=\"{}\" y=\"{}\">j = 2</text>\n", lx + 20, top + 36);
  s += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" stroke-width=\"2\"/>\n",
                   lx, top + 55, lx + 14, top + 55);
  s += fmt::format("<text x=\"{}\" y=\"{}\">l1 + l2 = 0</text>\n", lx + 20, top + 59);
  s += "</g>\n</svg>\n";
  return s;
}

}  // namespace ddim::cli
