#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "infusion/array.hpp"
#include "infusion/common.hpp"
#include "infusion/cpxa.hpp"

namespace infusion {

struct Canvas {
  std::size_t w = 0, h = 0;
  std::vector<std::uint8_t> rgb;

  Canvas(std::size_t width, std::size_t height, std::uint8_t fill = 255)
      : w(width), h(height), rgb(3 * width * height, fill) {}

  void put(std::size_t x, std::size_t y, std::uint8_t r, std::uint8_t g,
           std::uint8_t b) {
    if (x >= w || y >= h) return;
    std::uint8_t* p = &rgb[3 * (y * w + x)];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }

  void fill_rect(std::size_t x0, std::size_t y0, std::size_t dw,
                 std::size_t dh, std::uint8_t r, std::uint8_t g,
                 std::uint8_t b) {
    for (std::size_t y = y0; y < y0 + dh; ++y)
      for (std::size_t x = x0; x < x0 + dw; ++x) put(x, y, r, g, b);
  }

  void hline(std::size_t x0, std::size_t x1, std::size_t y, std::uint8_t r,
             std::uint8_t g, std::uint8_t b) {
    for (std::size_t x = std::min(x0, x1); x <= std::max(x0, x1); ++x)
      put(x, y, r, g, b);
  }

  void vline(std::size_t x, std::size_t y0, std::size_t y1, std::uint8_t r,
             std::uint8_t g, std::uint8_t b) {
    for (std::size_t y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
      put(x, y, r, g, b);
  }

  void line(double x0, double y0, double x1, double y1, std::uint8_t r,
            std::uint8_t g, std::uint8_t b) {
    const double dx = x1 - x0, dy = y1 - y0;
    const int steps = std::max(1, int(std::max(std::abs(dx), std::abs(dy))));
    for (int i = 0; i <= steps; ++i) {
      const double t = double(i) / steps;
      put(std::size_t(x0 + t * dx + 0.5), std::size_t(y0 + t * dy + 0.5), r, g,
          b);
    }
  }

  void save_ppm(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("figures: cannot write " + path.string());
    f << "P6\n" << w << " " << h << "\n255\n";
    f.write(reinterpret_cast<const char*>(rgb.data()),
            std::streamsize(rgb.size()));
  }
};

namespace detail {

// 5x7 glyphs, one byte per row, low 5 bits used, msb of the 5 is leftmost.
inline const std::uint8_t* glyph(char c) {
  static const std::uint8_t digits[10][7] = {
      {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},
      {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
      {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},
      {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
      {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},
      {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
      {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},
      {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
      {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},
      {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}};
  static const std::uint8_t letters[26][7] = {
      {0x00, 0x00, 0x0E, 0x01, 0x0F, 0x11, 0x0F},  // a
      {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x1E},  // b
      {0x00, 0x00, 0x0E, 0x10, 0x10, 0x11, 0x0E},  // c
      {0x01, 0x01, 0x0D, 0x13, 0x11, 0x11, 0x0F},  // d
      {0x00, 0x00, 0x0E, 0x11, 0x1F, 0x10, 0x0E},  // e
      {0x06, 0x09, 0x08, 0x1C, 0x08, 0x08, 0x08},  // f
      {0x00, 0x0F, 0x11, 0x11, 0x0F, 0x01, 0x0E},  // g
      {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x11},  // h
      {0x04, 0x00, 0x0C, 0x04, 0x04, 0x04, 0x0E},  // i
      {0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0C},  // j
      {0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12},  // k
      {0x0C, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E},  // l
      {0x00, 0x00, 0x1A, 0x15, 0x15, 0x15, 0x15},  // m
      {0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11},  // n
      {0x00, 0x00, 0x0E, 0x11, 0x11, 0x11, 0x0E},  // o
      {0x00, 0x00, 0x1E, 0x11, 0x1E, 0x10, 0x10},  // p
      {0x00, 0x00, 0x0F, 0x11, 0x0F, 0x01, 0x01},  // q
      {0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10},  // r
      {0x00, 0x00, 0x0F, 0x10, 0x0E, 0x01, 0x1E},  // s
      {0x08, 0x08, 0x1C, 0x08, 0x08, 0x09, 0x06},  // t
      {0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0D},  // u
      {0x00, 0x00, 0x11, 0x11, 0x11, 0x0A, 0x04},  // v
      {0x00, 0x00, 0x11, 0x11, 0x15, 0x15, 0x0A},  // w
      {0x00, 0x00, 0x11, 0x0A, 0x04, 0x0A, 0x11},  // x
      {0x00, 0x00, 0x11, 0x11, 0x0F, 0x01, 0x0E},  // y
      {0x00, 0x00, 0x1F, 0x02, 0x04, 0x08, 0x1F}};  // z
  static const std::uint8_t dash[7] = {0, 0, 0, 0x0E, 0, 0, 0};
  static const std::uint8_t dot[7] = {0, 0, 0, 0, 0, 0x0C, 0x0C};
  static const std::uint8_t eq[7] = {0, 0, 0x1F, 0, 0x1F, 0, 0};
  static const std::uint8_t comma[7] = {0, 0, 0, 0, 0x0C, 0x04, 0x08};
  static const std::uint8_t under[7] = {0, 0, 0, 0, 0, 0, 0x1F};
  static const std::uint8_t blank[7] = {0, 0, 0, 0, 0, 0, 0};
  if (c >= '0' && c <= '9') return digits[c - '0'];
  if (c >= 'a' && c <= 'z') return letters[c - 'a'];
  if (c >= 'A' && c <= 'Z') return letters[c - 'A'];
  switch (c) {
    case '-': return dash;
    case '.': return dot;
    case '=': return eq;
    case ',': return comma;
    case '_': return under;
    default: return blank;
  }
}

}  // namespace detail

inline void draw_text(Canvas& c, std::size_t x0, std::size_t y0,
                      const std::string& text, std::uint8_t r = 0,
                      std::uint8_t g = 0, std::uint8_t b = 0, int scale = 1) {
  std::size_t x = x0;
  for (char ch : text) {
    const std::uint8_t* rows = detail::glyph(ch);
    for (int ry = 0; ry < 7; ++ry)
      for (int rx = 0; rx < 5; ++rx)
        if (rows[ry] & (1 << (4 - rx)))
          for (int sy = 0; sy < scale; ++sy)
            for (int sx = 0; sx < scale; ++sx)
              c.put(x + std::size_t(rx * scale + sx),
                    y0 + std::size_t(ry * scale + sy), r, g, b);
    x += std::size_t(6 * scale);
  }
}

// Writes grayscale magnitudes into a rectangle of the canvas. Values are
// scaled by vmax and clipped; amplify multiplies magnitudes first so small
// residuals stay visible in error maps.
template <typename T>
void draw_magnitude(Canvas& c, std::size_t x0, std::size_t y0,
                    const ComplexArray<T>& img, std::size_t ny, std::size_t nx,
                    std::size_t offset, double vmax, double amplify = 1.0) {
  for (std::size_t iy = 0; iy < ny; ++iy)
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double m = amplify * std::abs(img[offset + iy * nx + ix]);
      const double v = vmax > 0 ? std::min(m / vmax, 1.0) : 0.0;
      const auto g = std::uint8_t(255.0 * v + 0.5);
      c.put(x0 + ix, y0 + iy, g, g, g);
    }
}

struct FigureRecord {
  std::string file;
  std::string annotation;
};

namespace detail {

inline std::vector<std::vector<std::string>> read_csv(
    const std::filesystem::path& path) {
  std::ifstream f(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        cells.push_back(cur);
        cur.clear();
      } else if (ch != '\r') {
        cur += ch;
      }
    }
    cells.push_back(cur);
    rows.push_back(std::move(cells));
  }
  return rows;
}

inline std::string format4(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// rank-2 view of an image or of the central slice of a volume
template <typename T>
void plane_view(const ComplexArray<T>& img, std::size_t& ny, std::size_t& nx,
                std::size_t& offset, std::string& note) {
  if (img.rank() == 2) {
    ny = img.dim(0);
    nx = img.dim(1);
    offset = 0;
    note.clear();
    return;
  }
  if (img.rank() == 3) {
    const std::size_t nz = img.dim(0);
    ny = img.dim(1);
    nx = img.dim(2);
    const std::size_t z = nz / 2;
    offset = z * ny * nx;
    note = " slice " + std::to_string(z);
    return;
  }
  throw ConfigError("figures: expected a rank 2 or 3 image");
}

}  // namespace detail

// Renders panels, error maps, and loss traces for one experiment run
// directory. Missing inputs are reported together in one error. Returns the
// figure list that was also written to figures/annotations.txt.
template <typename T = float>
std::vector<FigureRecord> render_run_figures(
    const std::filesystem::path& run_dir) {
  std::vector<std::string> missing;
  const auto require = [&](const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) missing.push_back(p.string());
  };
  require(run_dir / "metrics.csv");
  require(run_dir / "ground_truth.cpxa");
  auto metrics_rows = std::filesystem::exists(run_dir / "metrics.csv")
                          ? detail::read_csv(run_dir / "metrics.csv")
                          : std::vector<std::vector<std::string>>{};
  std::vector<std::pair<std::string, double>> arms;
  for (std::size_t i = 1; i < metrics_rows.size(); ++i)
    if (metrics_rows[i].size() >= 2)
      arms.emplace_back(metrics_rows[i][0], std::stod(metrics_rows[i][1]));
  for (const auto& [arm, unused] : arms)
    require(run_dir / arm / "image.cpxa");
  if (!missing.empty()) {
    std::string msg = "figures: missing inputs:";
    for (const auto& m : missing) msg += " " + m;
    throw ConfigError(msg);
  }

  const std::filesystem::path fig_dir = run_dir / "figures";
  std::filesystem::create_directories(fig_dir);
  std::vector<FigureRecord> records;

  ComplexArray<T> truth = load_array_as<T>(run_dir / "ground_truth.cpxa");
  std::size_t ny, nx, offset;
  std::string slice_note;
  detail::plane_view(truth, ny, nx, offset, slice_note);
  const double vmax = max_abs(truth);
  const std::size_t header = 14;

  {
    Canvas c(std::max<std::size_t>(nx, 110), ny + header);
    draw_magnitude(c, 0, header, truth, ny, nx, offset, vmax);
    draw_text(c, 2, 3, "ground truth");
    c.save_ppm(fig_dir / "ground_truth.ppm");
    records.push_back({"ground_truth.ppm", "ground truth magnitude" + slice_note});
  }

  for (const auto& [arm, err] : arms) {
    ComplexArray<T> img = load_array_as<T>(run_dir / arm / "image.cpxa");
    std::size_t iny, inx, ioff;
    std::string inote;
    detail::plane_view(img, iny, inx, ioff, inote);

    const std::string label = arm + " nrmse=" + detail::format4(err);
    Canvas c(std::max<std::size_t>(inx, 6 * label.size() + 4), iny + header);
    draw_magnitude(c, 0, header, img, iny, inx, ioff, vmax);
    draw_text(c, 2, 3, label);
    c.save_ppm(fig_dir / (arm + "_magnitude.ppm"));
    records.push_back({arm + "_magnitude.ppm", label + inote});

    ComplexArray<T> diff = img;
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= truth[i];
    const std::string elabel = arm + " error x5";
    Canvas e(std::max<std::size_t>(inx, 6 * elabel.size() + 4), iny + header);
    draw_magnitude(e, 0, header, diff, iny, inx, ioff, vmax, 5.0);
    draw_text(e, 2, 3, elabel);
    e.save_ppm(fig_dir / (arm + "_error.ppm"));
    records.push_back(
        {arm + "_error.ppm", arm + " absolute error amplified 5x" + inote});

    const std::filesystem::path trace_path = run_dir / arm / "trace.csv";
    if (std::filesystem::exists(trace_path)) {
      auto rows = detail::read_csv(trace_path);
      std::vector<double> total, data;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() < 5) continue;
        data.push_back(std::stod(rows[i][1]));
        total.push_back(std::stod(rows[i][4]));
      }
      if (!total.empty()) {
        const std::size_t W = 360, H = 220, ml = 34, mb = 18, mt = 16;
        Canvas p(W, H);
        double lo = 1e300, hi = -1e300;
        const auto log10c = [](double v) {
          return std::log10(std::max(v, 1e-12));
        };
        for (double v : total) { lo = std::min(lo, log10c(v)); hi = std::max(hi, log10c(v)); }
        for (double v : data) { lo = std::min(lo, log10c(v)); hi = std::max(hi, log10c(v)); }
        if (hi <= lo) hi = lo + 1.0;
        const auto px = [&](std::size_t i, std::size_t n) {
          return double(ml) + double(W - ml - 8) * double(i) / double(std::max<std::size_t>(n - 1, 1));
        };
        const auto py = [&](double v) {
          return double(H - mb) - (log10c(v) - lo) / (hi - lo) * double(H - mb - mt);
        };
        p.hline(ml, W - 6, H - mb, 0, 0, 0);
        p.vline(ml, mt - 2, H - mb, 0, 0, 0);
        for (std::size_t i = 1; i < total.size(); ++i) {
          p.line(px(i - 1, total.size()), py(data[i - 1]), px(i, total.size()),
                 py(data[i]), 60, 60, 220);
          p.line(px(i - 1, total.size()), py(total[i - 1]), px(i, total.size()),
                 py(total[i]), 200, 60, 60);
        }
        draw_text(p, ml + 4, 3, arm + " log10 loss");
        draw_text(p, W - 120, mt + 2, "total", 200, 60, 60);
        draw_text(p, W - 120, mt + 12, "data", 60, 60, 220);
        draw_text(p, W - 20, H - mb + 4, "j");
        p.save_ppm(fig_dir / (arm + "_trace.ppm"));
        records.push_back({arm + "_trace.ppm",
                           arm + " loss trace, log10 scale, red total, blue data"});
      }
    }
  }

  std::ofstream ann(fig_dir / "annotations.txt");
  for (const auto& r : records) ann << r.file << ": " << r.annotation << "\n";
  return records;
}

// Box plot of per-arm NRMSE distributions for a cohort directory.
inline std::vector<FigureRecord> render_cohort_figures(
    const std::filesystem::path& cohort_dir) {
  const std::filesystem::path csv_path = cohort_dir / "cohort.csv";
  if (!std::filesystem::exists(csv_path))
    throw ConfigError("figures: missing inputs: " + csv_path.string());
  auto rows = detail::read_csv(csv_path);
  std::map<std::string, std::vector<double>> by_arm;
  std::vector<std::string> order;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() < 4) continue;
    const std::string& arm = rows[i][2];
    if (!by_arm.count(arm)) order.push_back(arm);
    by_arm[arm].push_back(std::stod(rows[i][3]));
  }
  if (order.empty()) throw ConfigError("figures: cohort csv has no rows");

  const std::size_t per = 86, ml = 40, mt = 16, mb = 26;
  const std::size_t W = ml + per * order.size() + 10, H = 240;
  Canvas c(W, H);
  double hi = 0.0;
  for (auto& [arm, vals] : by_arm)
    for (double v : vals) hi = std::max(hi, v);
  if (hi <= 0) hi = 1.0;
  hi *= 1.05;
  const auto py = [&](double v) {
    return double(H - mb) - v / hi * double(H - mb - mt);
  };
  c.hline(ml, W - 6, H - mb, 0, 0, 0);
  c.vline(ml, mt - 2, H - mb, 0, 0, 0);
  draw_text(c, 2, 3, "nrmse");
  for (int g = 0; g <= 4; ++g) {
    const double v = hi * g / 5.0;
    draw_text(c, 2, std::size_t(py(v)) - 3, detail::format4(v).substr(0, 5));
  }
  std::vector<FigureRecord> records;
  std::string summary = "per arm median,min,max:";
  for (std::size_t a = 0; a < order.size(); ++a) {
    std::vector<double> v = by_arm[order[a]];
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    const auto quant = [&](double q) {
      const double pos = q * double(n - 1);
      const std::size_t i = std::size_t(pos);
      const double fr = pos - double(i);
      return i + 1 < n ? v[i] * (1 - fr) + v[i + 1] * fr : v[i];
    };
    const double q1 = quant(0.25), q2 = quant(0.5), q3 = quant(0.75);
    const std::size_t cx = ml + per * a + per / 2;
    const std::size_t bw = 28;
    c.vline(cx, std::size_t(py(v.back())), std::size_t(py(q3)), 0, 0, 0);
    c.vline(cx, std::size_t(py(q1)), std::size_t(py(v.front())), 0, 0, 0);
    c.hline(cx - 6, cx + 6, std::size_t(py(v.back())), 0, 0, 0);
    c.hline(cx - 6, cx + 6, std::size_t(py(v.front())), 0, 0, 0);
    for (std::size_t y = std::size_t(py(q3)); y <= std::size_t(py(q1)); ++y) {
      c.put(cx - bw / 2, y, 30, 30, 160);
      c.put(cx + bw / 2, y, 30, 30, 160);
    }
    c.hline(cx - bw / 2, cx + bw / 2, std::size_t(py(q3)), 30, 30, 160);
    c.hline(cx - bw / 2, cx + bw / 2, std::size_t(py(q1)), 30, 30, 160);
    c.hline(cx - bw / 2, cx + bw / 2, std::size_t(py(q2)), 200, 40, 40);
    const std::string& name = order[a];
    draw_text(c, cx - std::min<std::size_t>(3 * name.size(), cx - 2),
              H - mb + 6, name);
    summary += " " + name + "=" + detail::format4(q2) + "," +
               detail::format4(v.front()) + "," + detail::format4(v.back());
  }
  const std::filesystem::path fig_dir = cohort_dir / "figures";
  std::filesystem::create_directories(fig_dir);
  c.save_ppm(fig_dir / "cohort_box.ppm");
  records.push_back({"cohort_box.ppm", summary});
  std::ofstream ann(fig_dir / "annotations.txt");
  for (const auto& r : records) ann << r.file << ": " << r.annotation << "\n";
  return records;
}

}  // namespace infusion
