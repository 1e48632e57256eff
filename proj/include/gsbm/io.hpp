#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsbm/graph.hpp"

namespace gsbm {

/// Shortest round-trip-safe text for doubles in dumps that are read back.
inline std::string format_exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Nine significant digits, used for CSV metrics.
inline std::string format_csv(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Writes rows of comma-separated cells; numbers go through format_csv.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(path), path_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) out_ << ',';
      out_ << cells[c];
    }
    out_ << '\n';
    if (!out_) throw std::runtime_error("write failed on " + path_.string());
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Edge lists
// ---------------------------------------------------------------------------

/// Header `n <n> labels <l1,...>`, then one `i j label` line per edge with i < j.
inline void write_edge_list(std::ostream& out, const LabeledGraph& g) {
  out << "n " << g.n << " labels ";
  for (std::size_t l = 0; l < g.alphabet.size(); ++l) out << (l ? "," : "") << g.alphabet.name(static_cast<LabelId>(l));
  out << '\n';
  for (const Edge& e : g.edges) out << e.u << ' ' << e.v << ' ' << g.alphabet.name(e.label) << '\n';
}

/// Reads an edge list. Edges may come in any order and orientation; they are stored
/// sorted with u < v. Attributes are left empty.
inline LabeledGraph read_edge_list(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("edge list line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  std::istringstream head(line);
  std::string kw_n, kw_labels, labels;
  long long n = -1;
  if (!(head >> kw_n >> n >> kw_labels >> labels) || kw_n != "n" || kw_labels != "labels" || n < 0)
    fail("expected header 'n <n> labels <l1,...>'");

  std::vector<std::string> names;
  std::stringstream ls(labels);
  for (std::string tok; std::getline(ls, tok, ',');) names.push_back(tok);

  LabeledGraph g;
  g.n = static_cast<std::size_t>(n);
  try {
    g.alphabet = LabelAlphabet(names);
  } catch (const std::exception& e) {
    fail(e.what());
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    long long u = -1, v = -1;
    std::string label, extra;
    if (!(row >> u >> v >> label) || (row >> extra)) fail("expected 'i j label'");
    if (u < 0 || v < 0 || u >= n || v >= n) fail("node index out of range");
    if (u == v) fail("self-loop");
    const auto id = g.alphabet.find(label);
    if (!id) fail("unknown label '" + label + "'");
    if (u > v) std::swap(u, v);
    g.edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v), *id});
  }
  std::sort(g.edges.begin(), g.edges.end(),
            [](const Edge& a, const Edge& b) { return std::pair(a.u, a.v) < std::pair(b.u, b.v); });
  for (std::size_t e = 1; e < g.edges.size(); ++e)
    if (g.edges[e].u == g.edges[e - 1].u && g.edges[e].v == g.edges[e - 1].v)
      throw std::runtime_error("edge list: duplicate edge " + std::to_string(g.edges[e].u) + " " +
                               std::to_string(g.edges[e].v));
  return g;
}

inline void write_attributes(std::ostream& out, const std::vector<double>& attributes) {
  for (double a : attributes) out << format_exact(a) << '\n';
}

inline std::vector<double> read_attributes(std::istream& in) {
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::size_t used = 0;
    const double v = std::stod(line, &used);
    if (line.find_first_not_of(" \t\r", used) != std::string::npos)
      throw std::runtime_error("attribute file: malformed value '" + line + "'");
    out.push_back(v);
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  body(out);
  if (!out) throw std::runtime_error("write failed on " + path.string());
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

}  // namespace gsbm
