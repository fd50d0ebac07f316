/*
   Copyright 2026 The fdradio Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// Minimal static SVG output for the constellation and PSD dumps.

#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fdsim {

struct Series {
  std::string name;
  std::vector<double> x, y;
};

class SvgPlot {
 public:
  SvgPlot(std::string title, std::string xlabel, std::string ylabel)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

  void set_range(double x0, double x1, double y0, double y1) {
    x0_ = x0; x1_ = x1; y0_ = y0; y1_ = y1;
  }

  void scatter(const Series& s) { scatter_.push_back(s); }
  void line(const Series& s) { lines_.push_back(s); }

  void save(const std::string& path) const {
    std::ofstream f(path);
    f << render();
  }

  std::string render() const {
    constexpr double W = 640, H = 480, L = 70, R = 20, T = 40, B = 50;
    const double pw = W - L - R, ph = H - T - B;
    auto px = [&](double x) { return L + (x - x0_) / (x1_ - x0_) * pw; };
    auto py = [&](double y) { return T + (1.0 - (y - y0_) / (y1_ - y0_)) * ph; };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

    std::ostringstream o;
    char buf[256];
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf, "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n", L, T, pw, ph);
    o << buf;
    o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title_ << "</text>\n";
    o << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel_ << "</text>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"16\" y=\"%.1f\" font-size=\"13\" transform=\"rotate(-90 16 %.1f)\" text-anchor=\"middle\">", T + ph / 2, T + ph / 2);
    o << buf << ylabel_ << "</text>\n";
    for (int i = 0; i <= 4; ++i) {
      const double xv = x0_ + (x1_ - x0_) * i / 4.0, yv = y0_ + (y1_ - y0_) * i / 4.0;
      std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"middle\">%.3g</text>\n", px(xv), T + ph + 16, xv);
      o << buf;
      std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\">%.3g</text>\n", L - 6, py(yv) + 4, yv);
      o << buf;
    }
    std::size_t c = 0;
    for (const auto& s : scatter_) {
      const char* col = colors[c++ % 5];
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (s.x[i] < x0_ || s.x[i] > x1_ || s.y[i] < y0_ || s.y[i] > y1_) continue;
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"1\" fill=\"%s\"/>\n", px(s.x[i]), py(s.y[i]), col);
        o << buf;
      }
    }
    for (const auto& s : lines_) {
      const char* col = colors[c++ % 5];
      o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double yv = std::clamp(s.y[i], y0_, y1_);
        std::snprintf(buf, sizeof buf, "%.1f,%.1f ", px(s.x[i]), py(yv));
        o << buf;
      }
      o << "\"/>\n";
      std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" fill=\"%s\">%s</text>\n",
                    L + pw - 140, T + 16.0 * static_cast<double>(c - scatter_.size()), col, s.name.c_str());
      o << buf;
    }
    o << "</svg>\n";
    return o.str();
  }

 private:
  std::string title_, xlabel_, ylabel_;
  double x0_ = -1.5, x1_ = 1.5, y0_ = -1.5, y1_ = 1.5;
  std::vector<Series> scatter_, lines_;
};

// Reads a numeric CSV with a header row. Returns the header names and columns.
inline bool read_csv(const std::string& path, std::vector<std::string>& header,
                     std::vector<std::vector<double>>& cols) {
  std::ifstream f(path);
  if (!f) return false;
  std::string line;
  if (!std::getline(f, line)) return false;
  header.clear();
  std::stringstream hs(line);
  for (std::string h; std::getline(hs, h, ',');) header.push_back(h);
  cols.assign(header.size(), {});
  while (std::getline(f, line)) {
    std::stringstream ls(line);
    std::size_t i = 0;
    for (std::string v; std::getline(ls, v, ',') && i < cols.size(); ++i) cols[i].push_back(std::stod(v));
  }
  return true;
}

}  // namespace fdsim
