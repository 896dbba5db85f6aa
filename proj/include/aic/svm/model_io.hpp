#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "aic/error.hpp"
#include "aic/svm/anytime.hpp"
#include "aic/svm/train.hpp"

namespace aic::svm {

inline constexpr std::string_view model_format_tag = "aic-model/1";

// A model plus, optionally, the generator that produced its training data so
// that workloads can draw fresh labelled items from the same distribution.
struct ModelFile {
  AnytimeModel model;
  std::optional<GeneratorParams> generator;
};

// Line-oriented text: "<key> <values...>", '#' comments. Keys: format,
// classes, features, biases, weights (one line per class: index then n
// values), order, cost, lut, generator. Numbers use shortest round-trip form.
inline void write_model(std::ostream& out, const ModelFile& f) {
  const auto& m = f.model;
  m.validate();
  out << "# anytime one-vs-rest linear model\n";
  out << "format " << model_format_tag << '\n';
  out << "classes " << m.classes << '\n';
  out << "features " << m.features << '\n';
  out << fmt::format("biases {}\n", fmt::join(m.biases, " "));
  for (std::size_t h = 0; h < m.classes; ++h)
    out << fmt::format("weights {} {}\n", h, fmt::join(m.hyperplane(h), " "));
  out << fmt::format("order {}\n", fmt::join(m.order, " "));
  out << fmt::format("cost {}\n", fmt::join(m.feature_cost, " "));
  out << fmt::format("lut {}\n", fmt::join(m.accuracy_lut, " "));
  if (f.generator) {
    const auto& g = *f.generator;
    out << fmt::format("generator {} {} {} {} {} {}\n", g.classes, g.features, g.per_class,
                       g.separation, g.informative_decay, g.seed);
  }
}

inline ModelFile read_model(std::istream& in) {
  ModelFile f;
  auto& m = f.model;
  bool tagged = false;
  std::string line;
  std::size_t lineno = 0;
  std::vector<bool> have_plane;

  auto numbers = [&](std::istringstream& ss, auto& vec) {
    using T = typename std::decay_t<decltype(vec)>::value_type;
    T v{};
    while (ss >> v) vec.push_back(v);
    if (!ss.eof()) throw ParseError("bad number", lineno);
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "format") {
      std::string tag;
      ss >> tag;
      if (tag != model_format_tag) throw ParseError("unsupported model format '" + tag + "'", lineno);
      tagged = true;
    } else if (!tagged) {
      throw ParseError("model file must start with a format line", lineno);
    } else if (key == "classes") {
      if (!(ss >> m.classes)) throw ParseError("bad class count", lineno);
    } else if (key == "features") {
      if (!(ss >> m.features)) throw ParseError("bad feature count", lineno);
    } else if (key == "biases") {
      numbers(ss, m.biases);
    } else if (key == "weights") {
      std::size_t h = 0;
      if (!(ss >> h) || h >= m.classes || m.features == 0)
        throw ParseError("weights line before header or bad class index", lineno);
      m.weights.resize(m.classes * m.features);
      have_plane.resize(m.classes, false);
      std::vector<double> row;
      numbers(ss, row);
      if (row.size() != m.features) throw ParseError("wrong number of coefficients", lineno);
      std::copy(row.begin(), row.end(), m.weights.begin() + std::ptrdiff_t(h * m.features));
      have_plane[h] = true;
    } else if (key == "order") {
      numbers(ss, m.order);
    } else if (key == "cost") {
      numbers(ss, m.feature_cost);
    } else if (key == "lut") {
      numbers(ss, m.accuracy_lut);
    } else if (key == "generator") {
      GeneratorParams g;
      if (!(ss >> g.classes >> g.features >> g.per_class >> g.separation >> g.informative_decay >>
            g.seed))
        throw ParseError("bad generator line", lineno);
      f.generator = g;
    } else {
      throw ParseError("unknown key '" + key + "'", lineno);
    }
  }
  if (!tagged) throw ParseError("missing format line");
  if (have_plane.size() != m.classes ||
      std::find(have_plane.begin(), have_plane.end(), false) != have_plane.end())
    throw ParseError("model is missing hyperplanes");
  m.validate();
  return f;
}

inline void save_model(const std::filesystem::path& path, const ModelFile& f) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file " + path.string());
  write_model(out, f);
}

inline ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file " + path.string());
  return read_model(in);
}

// n feature columns then the (0-based) label.
inline void write_dataset_csv(std::ostream& out, const Dataset& d) {
  for (std::size_t j = 0; j < d.features; ++j) out << 'f' << j << ',';
  out << "label\n";
  for (std::size_t i = 0; i < d.size(); ++i)
    out << fmt::format("{},{}\n", fmt::join(d.sample(i), ","), d.label(i));
}

}  // namespace aic::svm
