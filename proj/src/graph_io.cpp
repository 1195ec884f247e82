#include "nap/graph_io.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "nap/errors.hpp"

namespace nap {

namespace {

using ordered_json = nlohmann::ordered_json;

const ordered_json& field(const ordered_json& doc, const char* name) {
  auto it = doc.find(name);
  if (it == doc.end()) throw ParseError(std::string("missing field \"") + name + "\"");
  return *it;
}

int int_field(const ordered_json& doc, const char* name) {
  const ordered_json& v = field(doc, name);
  if (!v.is_number_integer())
    throw ParseError(std::string("field \"") + name + "\" is not an integer");
  return v.get<int>();
}

std::vector<int> int_array(const ordered_json& v, const char* name) {
  if (!v.is_array()) throw ParseError(std::string("field \"") + name + "\" is not an array");
  std::vector<int> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_integer())
      throw ParseError(std::string("field \"") + name + "\"[" + std::to_string(i) +
                       "] is not an integer");
    out.push_back(v[i].get<int>());
  }
  return out;
}

}  // namespace

void save_graph(const Graph& g, const std::string& path) {
  require_valid(g);
  ordered_json doc;
  doc["num_nodes"] = g.num_nodes;
  doc["num_features"] = g.num_features;
  doc["num_domains"] = g.num_domains;
  doc["num_classes"] = g.num_classes;
  ordered_json features = ordered_json::array();
  for (int i = 0; i < g.num_nodes; ++i) {
    ordered_json row = ordered_json::array();
    for (int c = 0; c < g.num_features; ++c) row.push_back(g.features.at(i, c));
    features.push_back(std::move(row));
  }
  doc["features"] = std::move(features);
  ordered_json edges = ordered_json::array();
  for (auto [u, v] : g.edges) edges.push_back(ordered_json::array({u, v}));
  doc["edges"] = std::move(edges);
  doc["domains"] = g.domains;
  doc["labels"] = g.labels;

  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing: " + std::strerror(errno));
  out << doc.dump(1) << "\n";
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

Graph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + ": " + std::strerror(errno));
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError(path + ": top level is not an object");

  try {
    Graph g;
    g.num_nodes = int_field(doc, "num_nodes");
    g.num_features = int_field(doc, "num_features");
    g.num_domains = int_field(doc, "num_domains");
    g.num_classes = int_field(doc, "num_classes");
    if (g.num_nodes < 0 || g.num_features < 0)
      throw ParseError("negative num_nodes or num_features");

    const ordered_json& features = field(doc, "features");
    if (!features.is_array() || static_cast<int>(features.size()) != g.num_nodes)
      throw ParseError("\"features\" must be an array of num_nodes rows");
    g.features = Matrix(g.num_nodes, g.num_features);
    for (int i = 0; i < g.num_nodes; ++i) {
      const ordered_json& row = features[i];
      if (!row.is_array() || static_cast<int>(row.size()) != g.num_features)
        throw ParseError("\"features\"[" + std::to_string(i) +
                         "] must hold num_features numbers");
      for (int c = 0; c < g.num_features; ++c) {
        if (!row[c].is_number())
          throw ParseError("\"features\"[" + std::to_string(i) + "][" + std::to_string(c) +
                           "] is not a number");
        g.features.at(i, c) = row[c].get<double>();
      }
    }

    const ordered_json& edges = field(doc, "edges");
    if (!edges.is_array()) throw ParseError("\"edges\" is not an array");
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const ordered_json& pair = edges[e];
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
          !pair[1].is_number_integer())
        throw ParseError("\"edges\"[" + std::to_string(e) + "] is not an [u, v] integer pair");
      g.edges.emplace_back(pair[0].get<int>(), pair[1].get<int>());
    }

    g.domains = int_array(field(doc, "domains"), "domains");
    g.labels = int_array(field(doc, "labels"), "labels");

    require_valid(g);
    return g;
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace nap
