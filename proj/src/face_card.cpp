// Copyright 2026 The Smiledesign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "smile/face_card.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "smile/error.hpp"

namespace smile {
namespace {

constexpr int kSuper = 4;            // supersampling factor per axis
constexpr int kContourVertices = 1440;

struct Ellipse {
  double cx, cy, rx, ry;
  bool contains(double x, double y) const {
    const double dx = (x - cx) / rx;
    const double dy = (y - cy) / ry;
    return dx * dx + dy * dy <= 1.0;
  }
};

std::vector<Point2> contour_polygon(const FaceTemplate& face) {
  std::vector<Point2> poly(kContourVertices);
  for (int k = 0; k <= kContourVertices / 2; ++k) {
    poly[k] = face.contour_point(2.0 * std::numbers::pi * k / kContourVertices);
  }
  for (int k = kContourVertices / 2 + 1; k < kContourVertices; ++k) {
    const Point2 m = poly[kContourVertices - k];
    poly[k] = {2.0 * face.center_x - m.x, m.y};
  }
  return poly;
}

// Fractional face coverage per pixel: exact in x, kSuper sub-rows in y.
std::vector<double> face_coverage(const FaceTemplate& face) {
  const int w = face.image_width;
  const int h = face.image_height;
  const auto poly = contour_polygon(face);
  std::vector<double> cov(static_cast<std::size_t>(w) * h, 0.0);
  std::vector<double> xs;
  for (int y = 0; y < h; ++y) {
    for (int s = 0; s < kSuper; ++s) {
      const double sy = y + (s + 0.5) / kSuper;
      xs.clear();
      for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point2& p = poly[i];
        const Point2& q = poly[(i + 1) % poly.size()];
        if ((p.y <= sy) != (q.y <= sy)) {
          xs.push_back(p.x + (sy - p.y) * (q.x - p.x) / (q.y - p.y));
        }
      }
      std::sort(xs.begin(), xs.end());
      for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
        const double x0 = std::clamp(xs[i], 0.0, static_cast<double>(w));
        const double x1 = std::clamp(xs[i + 1], 0.0, static_cast<double>(w));
        for (int j = static_cast<int>(std::floor(x0)); j < w && j <= static_cast<int>(x1); ++j) {
          const double overlap = std::min(x1, j + 1.0) - std::max(x0, static_cast<double>(j));
          if (overlap > 0.0) cov[static_cast<std::size_t>(y) * w + j] += overlap / kSuper;
        }
      }
    }
  }
  return cov;
}

double project(const std::uint8_t* px, const Rgb& from, const Rgb& to) {
  double num = 0.0, den = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double axis = static_cast<double>(to[c]) - from[c];
    num += (static_cast<double>(px[c]) - from[c]) * axis;
    den += axis * axis;
  }
  return num / den;
}

// Barycentric unmixing against the four palette colours; returns the weight
// of `target`. Anti-aliased pixels are convex mixtures of the palette, so the
// weights recover the coverage of each colour exactly.
class Unmixer {
 public:
  Unmixer(const FaceCardPalette& p, const Rgb& target) : origin_(p.eye) {
    const Rgb* others[3] = {&p.background, &p.skin, &p.mouth};
    double m[3][3];
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m[r][c] = static_cast<double>((*others[c])[r]) - origin_[r];
    }
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if (std::abs(det) < 1e-9) throw Error(ErrorCode::kInvalidArgument, "face card palette is degenerate");
    int column = -1;
    for (int c = 0; c < 3; ++c) {
      if (others[c] == &target) column = c;
    }
    // Row `column` of the inverse matrix (cofactors of that column).
    const int a = (column + 1) % 3, b = (column + 2) % 3;
    for (int r = 0; r < 3; ++r) {
      const int r1 = (r + 1) % 3, r2 = (r + 2) % 3;
      row_[r] = (m[r1][a] * m[r2][b] - m[r1][b] * m[r2][a]) / det;
    }
  }

  double operator()(const std::uint8_t* px) const {
    double w = 0.0;
    for (int c = 0; c < 3; ++c) w += row_[c] * (static_cast<double>(px[c]) - origin_[c]);
    return w;
  }

 private:
  Rgb origin_;
  double row_[3];
};

[[noreturn]] void extraction_failed(const std::string& why) {
  throw Error(ErrorCode::kLandmarkExtractionFailed, "no face card found: " + why);
}

}  // namespace

Image render_face_card(const FaceTemplate& face, const FaceCardPalette& palette) {
  const int w = face.image_width;
  const int h = face.image_height;
  Image image(w, h);
  const auto cov = face_coverage(face);

  const Ellipse eyes[2] = {
      {face.center_x - 0.38 * face.half_width, face.center_y - 0.25 * face.half_height,
       0.16 * face.half_width, 0.07 * face.half_height},
      {face.center_x + 0.38 * face.half_width, face.center_y - 0.25 * face.half_height,
       0.16 * face.half_width, 0.07 * face.half_height}};
  const double band = 0.5 * face.lip_thickness * face.mouth_width;
  const double mouth_x0 = face.left_corner_x();
  const double mouth_x1 = face.right_corner_x();

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double cf = cov[static_cast<std::size_t>(y) * w + x];
      double cm = 0.0, ce = 0.0;
      if (cf > 0.0) {
        for (int sy = 0; sy < kSuper; ++sy) {
          const double py = y + (sy + 0.5) / kSuper;
          for (int sx = 0; sx < kSuper; ++sx) {
            const double px = x + (sx + 0.5) / kSuper;
            if (px >= mouth_x0 && px <= mouth_x1) {
              const double s = (px - mouth_x0) / (mouth_x1 - mouth_x0);
              if (std::abs(py - face.lower_lip_point(s).y) <= band) {
                cm += 1.0;
                continue;
              }
            }
            if (eyes[0].contains(px, py) || eyes[1].contains(px, py)) ce += 1.0;
          }
        }
        cm /= kSuper * kSuper;
        ce /= kSuper * kSuper;
      }
      auto* out = image.pixel(x, y);
      for (int c = 0; c < 3; ++c) {
        const double inner = palette.skin[c] * (1.0 - cm - ce) + palette.mouth[c] * cm + palette.eye[c] * ce;
        const double v = palette.background[c] * (1.0 - cf) + inner * cf;
        out[c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return image;
}

LandmarkSet extract_face_card_landmarks(const Image& image, const LandmarkIndexMap& idx,
                                        const FaceCardPalette& palette, std::string source_id) {
  const int w = image.width();
  const int h = image.height();
  if (w < 16 || h < 16) extraction_failed("image too small");

  // Face-ness: position of each pixel on the background -> skin axis.
  std::vector<double> alpha(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      alpha[static_cast<std::size_t>(y) * w + x] =
          std::clamp(project(image.pixel(x, y), palette.background, palette.skin), 0.0, 1.0);
    }
  }
  auto a_at = [&](int x, int y) { return alpha[static_cast<std::size_t>(y) * w + x]; };
  auto bilinear = [&](double x, double y) {
    const double fx = std::clamp(x - 0.5, 0.0, w - 1.0);
    const double fy = std::clamp(y - 0.5, 0.0, h - 1.0);
    const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
    const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
    const double tx = fx - x0, ty = fy - y0;
    return (a_at(x0, y0) * (1 - tx) + a_at(x1, y0) * tx) * (1 - ty) +
           (a_at(x0, y1) * (1 - tx) + a_at(x1, y1) * tx) * ty;
  };

  // Outer edges of a 1-D profile by the coverage-area estimator: the edge sits
  // where the summed shortfall from full coverage says it must.
  constexpr double kOn = 0.02;
  constexpr int kWindow = 4;
  auto edges = [&](const std::vector<double>& prof, double& lo, double& hi) {
    const int n = static_cast<int>(prof.size());
    int first = 0;
    while (first < n && prof[first] <= kOn) ++first;
    int last = n - 1;
    while (last >= 0 && prof[last] <= kOn) --last;
    if (first >= n || last - first < 2 * kWindow) return false;
    lo = first;
    for (int k = first; k < first + kWindow; ++k) lo += 1.0 - prof[k];
    hi = last + 1.0;
    for (int k = last; k > last - kWindow; --k) hi -= 1.0 - prof[k];
    return true;
  };

  std::vector<double> row_lo(h, NAN), row_hi(h, NAN);
  double max_width = 0.0;
  std::vector<double> prof(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) prof[x] = a_at(x, y);
    double lo, hi;
    if (edges(prof, lo, hi)) {
      row_lo[y] = lo;
      row_hi[y] = hi;
      max_width = std::max(max_width, hi - lo);
    }
  }
  if (max_width < 8.0) extraction_failed("no face region");

  double mid_sum = 0.0;
  int mid_rows = 0;
  for (int y = 0; y < h; ++y) {
    if (!std::isnan(row_lo[y]) && row_hi[y] - row_lo[y] >= 0.3 * max_width) {
      mid_sum += 0.5 * (row_lo[y] + row_hi[y]);
      ++mid_rows;
    }
  }
  const double cx = mid_sum / mid_rows;

  std::vector<double> column(h);
  for (int y = 0; y < h; ++y) column[y] = bilinear(cx, y + 0.5);
  double top_y, chin_y;
  if (!edges(column, top_y, chin_y)) extraction_failed("no vertical face extent");
  const double cy = 0.5 * (top_y + chin_y);

  auto cast = [&](double angle) {
    const double dx = std::sin(angle), dy = -std::cos(angle);
    constexpr double kStep = 0.25;
    double prev = bilinear(cx, cy);
    double boundary = 0.0;
    for (double t = kStep;; t += kStep) {
      const double x = cx + t * dx, y = cy + t * dy;
      if (x < 0.0 || y < 0.0 || x > w || y > h) break;
      const double cur = bilinear(x, y);
      if (prev >= 0.5 && cur < 0.5) boundary = t - kStep + kStep * (prev - 0.5) / (prev - cur);
      prev = cur;
    }
    return Point2{cx + boundary * dx, cy + boundary * dy};
  };

  FaceStructure face;
  face.image_width = w;
  face.image_height = h;
  face.midline_x = cx;
  face.top_y = top_y;
  face.chin_y = chin_y;
  face.center_y = cy;
  const std::size_t n = idx.face_oval().size();
  face.oval.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    face.oval[k] = cast(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
  }

  // Lip mass per column in the lower face, restricted to the face interior.
  const Unmixer lip_weight(palette, palette.mouth);
  std::vector<double> mass(w, 0.0), moment(w, 0.0);
  const int y_begin = std::max(0, static_cast<int>(cy));
  const int y_end = std::min(h, static_cast<int>(chin_y) + 1);
  for (int y = y_begin; y < y_end; ++y) {
    if (std::isnan(row_lo[y])) continue;
    const int x_begin = std::max(0, static_cast<int>(std::ceil(row_lo[y] + 2.0)));
    const int x_end = std::min(w, static_cast<int>(std::floor(row_hi[y] - 2.0)));
    for (int x = x_begin; x < x_end; ++x) {
      const double beta = std::clamp((lip_weight(image.pixel(x, y)) - 0.15) / 0.7, 0.0, 1.0);
      mass[x] += beta;
      moment[x] += beta * (y + 0.5);
    }
  }
  const auto peak = std::max_element(mass.begin(), mass.end());
  if (*peak < 1.0) extraction_failed("no mouth");
  const int j_peak = static_cast<int>(peak - mass.begin());
  std::vector<double> strong;
  int j_first = j_peak, j_last = j_peak;
  while (j_first > 0 && mass[j_first - 1] > 0.1 * *peak) --j_first;
  while (j_last < w - 1 && mass[j_last + 1] > 0.1 * *peak) ++j_last;
  for (int j = j_first; j <= j_last; ++j) {
    if (mass[j] >= 0.5 * *peak) strong.push_back(mass[j]);
  }
  std::nth_element(strong.begin(), strong.begin() + strong.size() / 2, strong.end());
  const double m_ref = strong[strong.size() / 2];
  if (j_last - j_first < 6) extraction_failed("mouth too narrow");

  std::vector<Point2> arc;
  for (int j = j_first + 1; j < j_last; ++j) arc.push_back({j + 0.5, moment[j] / mass[j]});
  const Quadratic q = fit_quadratic(arc);
  const double left = j_first + 1.0 - std::min(1.0, mass[j_first] / m_ref);
  const double right = j_last + std::min(1.0, mass[j_last] / m_ref);
  const double mouth_width = right - left;

  const std::size_t n_low = idx.lower_lip_outer().size();
  const std::size_t n_up = idx.upper_lip_outer().size();
  face.lower_lip.resize(n_low);
  for (std::size_t i = 0; i < n_low; ++i) {
    const double x = left + mouth_width * static_cast<double>(i) / static_cast<double>(n_low - 1);
    face.lower_lip[i] = {x, q(x)};
  }
  face.upper_lip.resize(n_up);
  for (std::size_t i = 0; i < n_up; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(n_up - 1);
    const double x = left + mouth_width * s;
    const double u = s - 0.5;
    face.upper_lip[i] = {x, q(x) - 0.12 * mouth_width * (1.0 - 4.0 * u * u)};
  }
  face.corner_left = face.lower_lip.front();
  face.corner_right = face.lower_lip.back();
  return assemble_landmarks(face, idx, std::move(source_id));
}

}  // namespace smile
