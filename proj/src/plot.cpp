#include "interedit/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

namespace interedit::plot {

namespace {

Eigen::Vector2d project(const Vec& p, int j, View view) {
  if (view == View::Front) return {p[3 * j], p[3 * j + 1]};
  return {p[3 * j], p[3 * j + 2]};
}

}  // namespace

std::vector<std::string> write_svg_frames(const motion::TwoPersonSequence& seq, const motion::Skeleton& sk,
                                          const std::string& directory, int stride, View view) {
  require(stride >= 1, "plot: stride must be >= 1");
  seq.validate();
  std::filesystem::create_directories(directory);

  // One bounding box for the whole clip so the camera does not jump between frames.
  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x, lo_y = lo_x, hi_y = -lo_x;
  for (int l = 0; l < seq.length(); ++l) {
    for (const auto* person : {&seq.person_a, &seq.person_b}) {
      for (int j = 0; j < sk.joint_count; ++j) {
        const auto q = project((*person)[static_cast<std::size_t>(l)].positions, j, view);
        lo_x = std::min(lo_x, q.x());
        hi_x = std::max(hi_x, q.x());
        lo_y = std::min(lo_y, q.y());
        hi_y = std::max(hi_y, q.y());
      }
    }
  }
  const double pad = 0.2;
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-3}) + 2 * pad;
  const double size = 480.0;
  auto to_px = [&](const Eigen::Vector2d& q) {
    return Eigen::Vector2d((q.x() - lo_x + pad) / span * size, size - (q.y() - lo_y + pad) / span * size);
  };

  std::vector<std::string> paths;
  const char* colors[2] = {"#c0392b", "#2471a3"};
  for (int l = 0; l < seq.length(); l += stride) {
    char name[64];
    std::snprintf(name, sizeof name, "frame_%04d.svg", l);
    const std::string path = (std::filesystem::path(directory) / name).string();
    std::ofstream os(path);
    if (!os) throw Error("cannot open '" + path + "' for writing");
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    int pi = 0;
    for (const auto* person : {&seq.person_a, &seq.person_b}) {
      const Vec& p = (*person)[static_cast<std::size_t>(l)].positions;
      for (int j = 1; j < sk.joint_count; ++j) {
        const auto a = to_px(project(p, j, view));
        const auto b = to_px(project(p, sk.parents[static_cast<std::size_t>(j)], view));
        os << "<line x1=\"" << a.x() << "\" y1=\"" << a.y() << "\" x2=\"" << b.x() << "\" y2=\"" << b.y()
           << "\" stroke=\"" << colors[pi] << "\" stroke-width=\"3\"/>\n";
      }
      ++pi;
    }
    os << "<text x=\"8\" y=\"20\" font-family=\"monospace\" font-size=\"14\">frame " << l << "</text>\n</svg>\n";
    paths.push_back(path);
  }
  return paths;
}

}  // namespace interedit::plot
