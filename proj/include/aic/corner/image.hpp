#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "aic/error.hpp"

namespace aic::corner {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(std::size_t(std::max(w, 0)) * std::size_t(std::max(h, 0)), fill) {
    validate();
  }

  std::size_t size() const noexcept { return pixels.size(); }
  std::uint8_t at(int x, int y) const { return pixels[std::size_t(y) * std::size_t(width) + std::size_t(x)]; }
  std::uint8_t& at(int x, int y) { return pixels[std::size_t(y) * std::size_t(width) + std::size_t(x)]; }

  // Border-replicating access.
  std::uint8_t clamped(int x, int y) const {
    return at(std::clamp(x, 0, width - 1), std::clamp(y, 0, height - 1));
  }

  void validate() const {
    if (width < 3 || height < 3) throw Error("image must be at least 3x3");
    if (pixels.size() != std::size_t(width) * std::size_t(height))
      throw Error("pixel count does not match image size");
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

// Binary PGM (P5) with maxval <= 255.
inline GrayImage read_pgm(std::istream& in) {
  auto token = [&]() {
    std::string t;
    char c = 0;
    while (in.get(c)) {
      if (c == '#') {
        std::string rest;
        std::getline(in, rest);
      } else if (!std::isspace(static_cast<unsigned char>(c))) {
        t.push_back(c);
        break;
      }
    }
    while (in.get(c) && !std::isspace(static_cast<unsigned char>(c))) t.push_back(c);
    return t;
  };
  if (token() != "P5") throw ParseError("not a binary PGM (P5) image");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw ParseError("bad PGM header");
  }
  if (maxval <= 0 || maxval > 255) throw ParseError("PGM maxval must be in 1..255");
  GrayImage img(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
  if (in.gcount() != std::streamsize(img.pixels.size())) throw ParseError("truncated PGM data");
  if (maxval != 255)
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(std::min(255, p * 255 / maxval));
  return img;
}

inline void write_pgm(std::ostream& out, const GrayImage& img) {
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
}

inline GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open image " + path.string());
  return read_pgm(in);
}

// Procedural scenes, one primitive per line:
//   size W H
//   background V
//   rect X0 Y0 X1 Y1 V            (inclusive corners)
//   triangle X0 Y0 X1 Y1 X2 Y2 V
//   ellipse CX CY RX RY V
// Later primitives paint over earlier ones.
inline GrayImage render_scene(std::string_view spec) {
  std::istringstream in{std::string(spec)};
  std::string line;
  std::size_t lineno = 0;
  GrayImage img;
  bool sized = false;
  auto need_size = [&] {
    if (!sized) throw ParseError("scene must start with 'size'", lineno);
  };
  auto value = [&](int v) {
    if (v < 0 || v > 255) throw ParseError("intensity must be 0..255", lineno);
    return static_cast<std::uint8_t>(v);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string op;
    if (!(ss >> op) || op[0] == '#') continue;
    if (op == "size") {
      int w = 0, h = 0;
      if (!(ss >> w >> h)) throw ParseError("bad size", lineno);
      img = GrayImage(w, h);
      sized = true;
    } else if (op == "background") {
      need_size();
      int v = 0;
      if (!(ss >> v)) throw ParseError("bad background", lineno);
      std::fill(img.pixels.begin(), img.pixels.end(), value(v));
    } else if (op == "rect") {
      need_size();
      int x0, y0, x1, y1, v;
      if (!(ss >> x0 >> y0 >> x1 >> y1 >> v)) throw ParseError("bad rect", lineno);
      const auto c = value(v);
      for (int y = std::max(0, y0); y <= std::min(img.height - 1, y1); ++y)
        for (int x = std::max(0, x0); x <= std::min(img.width - 1, x1); ++x) img.at(x, y) = c;
    } else if (op == "triangle") {
      need_size();
      double ax, ay, bx, by, cx, cy;
      int v;
      if (!(ss >> ax >> ay >> bx >> by >> cx >> cy >> v)) throw ParseError("bad triangle", lineno);
      const auto c = value(v);
      auto edge = [](double px, double py, double qx, double qy, double x, double y) {
        return (qx - px) * (y - py) - (qy - py) * (x - px);
      };
      const double area = edge(ax, ay, bx, by, cx, cy);
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
          double e0 = edge(ax, ay, bx, by, x, y), e1 = edge(bx, by, cx, cy, x, y),
                 e2 = edge(cx, cy, ax, ay, x, y);
          if (area < 0) e0 = -e0, e1 = -e1, e2 = -e2;
          if (e0 >= 0 && e1 >= 0 && e2 >= 0) img.at(x, y) = c;
        }
    } else if (op == "ellipse") {
      need_size();
      double cx, cy, rx, ry;
      int v;
      if (!(ss >> cx >> cy >> rx >> ry >> v) || rx <= 0 || ry <= 0)
        throw ParseError("bad ellipse", lineno);
      const auto c = value(v);
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
          const double dx = (x - cx) / rx, dy = (y - cy) / ry;
          if (dx * dx + dy * dy <= 1.0) img.at(x, y) = c;
        }
    } else {
      throw ParseError("unknown scene primitive '" + op + "'", lineno);
    }
  }
  if (!sized) throw ParseError("empty scene");
  return img;
}

// Built-in test scenes.
inline std::string_view scene_spec(std::string_view name) {
  if (name == "rectangle")
    return "size 96 72\n"
           "background 40\n"
           "rect 28 20 67 51 200\n";
  if (name == "cross")
    return "size 96 72\n"
           "background 40\n"
           "rect 40 12 55 59 190\n"
           "rect 22 28 73 43 190\n";
  if (name == "complex")
    return "size 96 72\n"
           "background 50\n"
           "rect 8 8 35 30 190\n"
           "rect 20 18 30 26 120\n"
           "triangle 55 10 88 14 70 34 210\n"
           "rect 60 42 86 63 100\n"
           "ellipse 24 52 11 8 160\n"
           "rect 44 38 50 44 230\n";
  throw Error("unknown scene '" + std::string(name) + "'");
}

inline std::vector<std::string> scene_names() { return {"rectangle", "cross", "complex"}; }

inline GrayImage make_scene(std::string_view name) { return render_scene(scene_spec(name)); }

}  // namespace aic::corner
