#include "relufe/io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "relufe/error.hpp"

namespace relufe::io {

using nlohmann::json;

namespace {

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed document: ") + e.what());
  }
}

const json& field(const json& obj, const std::string& name, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  auto it = obj.find(name);
  if (it == obj.end()) throw ParseError(where + ": missing field '" + name + "'");
  return *it;
}

double real(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw ParseError(where + ": non-finite number");
  return x;
}

long long integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ParseError(where + ": expected an integer");
  return j.get<long long>();
}

std::vector<double> reals(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(real(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Vec vec(const json& j, const std::string& where) {
  const auto v = reals(j, where);
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Mat dense(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of rows");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < j.size(); ++i) rows.push_back(reals(j[i], where + "[" + std::to_string(i) + "]"));
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Mat out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw ParseError(where + "[" + std::to_string(i) + "]: ragged row");
    for (std::size_t k = 0; k < cols; ++k) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return out;
}

json to_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }
json to_json(const RowVec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vec(m.row(i).transpose())));
  return rows;
}

json halfspaces_json(const ConvexCell& cell) {
  json hs = json::array();
  for (const auto& h : cell.halfspaces) hs.push_back({{"w", to_json(h.normal)}, {"b", h.offset}});
  return hs;
}

std::vector<Halfspace> parse_halfspaces(const json& j, int n, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array");
  std::vector<Halfspace> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    Halfspace h;
    const Vec normal = vec(field(j[i], "w", w), w + ".w");
    if (normal.size() != n) throw ValidationError(w + ".w: expected " + std::to_string(n) + " components");
    h.normal = normal.transpose();
    h.offset = real(field(j[i], "b", w), w + ".b");
    out.push_back(h);
  }
  return out;
}

std::string dump(const json& j) { return j.dump(1) + "\n"; }

}  // namespace

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

// ---- mesh ----

PolytopeMesh parse_mesh(const std::string& text) {
  const json doc = parse_json(text);
  PolytopeMesh mesh;
  const long long n = integer(field(doc, "dimension", "mesh"), "mesh.dimension");
  if (n < 1) throw ValidationError("mesh.dimension: must be >= 1");
  mesh.dimension = static_cast<int>(n);
  const json& cells = field(doc, "cells", "mesh");
  if (!cells.is_array() || cells.empty()) throw ParseError("mesh.cells: expected a non-empty array");

  std::map<std::vector<double>, std::size_t> vertex_index;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const std::string where = "mesh.cells[" + std::to_string(c) + "]";
    const json& cj = cells[c];
    if (!cj.is_object()) throw ParseError(where + ": expected an object");
    ConvexCell cell;
    std::vector<Vec> verts;
    if (cj.contains("vertices")) {
      const Mat v = dense(cj["vertices"], where + ".vertices");
      if (v.cols() != n) throw ValidationError(where + ".vertices: wrong coordinate count");
      if (v.rows() != n + 1) throw ValidationError(where + ".vertices: a simplex needs n+1 vertices");
      for (Eigen::Index i = 0; i < v.rows(); ++i) {
        verts.push_back(v.row(i).transpose());
        std::vector<double> key(verts.back().data(), verts.back().data() + n);
        auto [it, inserted] = vertex_index.emplace(key, mesh.vertices.size());
        if (inserted) mesh.vertices.push_back(verts.back());
        cell.vertex_ids.push_back(it->second);
      }
    }
    if (cj.contains("halfspaces")) {
      cell.halfspaces = parse_halfspaces(cj["halfspaces"], mesh.dimension, where + ".halfspaces");
    } else if (!verts.empty()) {
      cell.halfspaces = simplex_cell(verts).halfspaces;
    } else {
      throw ParseError(where + ": needs 'halfspaces' or 'vertices'");
    }
    mesh.cells.push_back(std::move(cell));
  }
  if (doc.contains("domain_hull")) {
    const json& hj = doc["domain_hull"];
    ConvexCell hull;
    hull.halfspaces = parse_halfspaces(hj.is_object() ? field(hj, "halfspaces", "mesh.domain_hull") : hj,
                                       mesh.dimension, "mesh.domain_hull.halfspaces");
    mesh.domain_hull = std::move(hull);
  }
  return mesh;
}

PolytopeMesh read_mesh(const std::string& path) { return parse_mesh(read_text(path)); }

std::string format_mesh(const PolytopeMesh& mesh) {
  json doc;
  doc["dimension"] = mesh.dimension;
  json cells = json::array();
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    json cj;
    cj["halfspaces"] = halfspaces_json(mesh.cells[c]);
    if (!mesh.cells[c].vertex_ids.empty()) {
      json vs = json::array();
      for (const auto& v : mesh.cell_vertices(c)) vs.push_back(to_json(v));
      cj["vertices"] = vs;
    }
    cells.push_back(cj);
  }
  doc["cells"] = cells;
  if (mesh.domain_hull) doc["domain_hull"] = {{"halfspaces", halfspaces_json(*mesh.domain_hull)}};
  return dump(doc);
}

// ---- function ----

PiecewiseLinear parse_function(const std::string& text, const PolytopeMesh& mesh) {
  const json doc = parse_json(text);
  const json& kj = field(doc, "kind", "function");
  if (!kj.is_string()) throw ParseError("function.kind: expected a string");
  const FunctionKind kind = function_kind_from_string(kj.get<std::string>());

  if (doc.contains("nodal_values")) {
    const json& nv = doc["nodal_values"];
    std::vector<double> values(mesh.vertices.size(), std::nan(""));
    if (nv.is_array()) {
      values = reals(nv, "function.nodal_values");
    } else if (nv.is_object()) {
      for (auto it = nv.begin(); it != nv.end(); ++it) {
        std::size_t idx = 0;
        try {
          idx = std::stoul(it.key());
        } catch (const std::exception&) {
          throw ParseError("function.nodal_values: key '" + it.key() + "' is not a vertex index");
        }
        if (idx >= values.size()) throw ValidationError("function.nodal_values: vertex " + it.key() + " out of range");
        values[idx] = real(it.value(), "function.nodal_values." + it.key());
      }
    } else {
      throw ParseError("function.nodal_values: expected an array or an object");
    }
    if (values.size() != mesh.vertices.size()) {
      throw ValidationError("function.nodal_values: expected " + std::to_string(mesh.vertices.size()) + " values");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (std::isnan(values[i])) throw ValidationError("function.nodal_values: vertex " + std::to_string(i) + " missing");
    }
    return nodal_linear(mesh, values);
  }

  const json& pj = field(doc, "pieces", "function");
  if (!pj.is_array()) throw ParseError("function.pieces: expected an array");
  if (pj.size() != mesh.cells.size()) {
    throw ValidationError("function.pieces: expected " + std::to_string(mesh.cells.size()) + " pieces");
  }
  PiecewiseLinear v;
  v.kind = kind;
  for (std::size_t c = 0; c < pj.size(); ++c) {
    const std::string where = "function.pieces[" + std::to_string(c) + "]";
    AffinePiece piece;
    const Vec a = vec(field(pj[c], "a", where), where + ".a");
    if (a.size() != mesh.dimension) throw ValidationError(where + ".a: wrong length");
    piece.gradient = a.transpose();
    piece.constant = real(field(pj[c], "c", where), where + ".c");
    v.pieces.push_back(piece);
  }
  return v;
}

PiecewiseLinear read_function(const std::string& path, const PolytopeMesh& mesh) {
  return parse_function(read_text(path), mesh);
}

std::string format_function(const PiecewiseLinear& v) {
  json doc;
  doc["kind"] = to_string(v.kind);
  json pieces = json::array();
  for (const auto& p : v.pieces) pieces.push_back({{"a", to_json(p.gradient)}, {"c", p.constant}});
  doc["pieces"] = pieces;
  return dump(doc);
}

// ---- fnn ----

ReluNet2 parse_network(const std::string& text) {
  const json doc = parse_json(text);
  const json& arch = field(doc, "arch", "network");
  if (!arch.is_string() || arch.get<std::string>() != "fnn2") throw ParseError("network.arch: expected \"fnn2\"");
  const long long n = integer(field(doc, "n", "network"), "network.n");
  const long long h1 = integer(field(doc, "h1", "network"), "network.h1");
  const long long h2 = integer(field(doc, "h2", "network"), "network.h2");
  if (n < 1 || h1 < 0 || h2 < 0) throw ValidationError("network: n, h1, h2 out of range");

  ReluNet2 net;
  net.W1 = dense(field(doc, "W1", "network"), "network.W1");
  if (net.W1.rows() == 0) net.W1.resize(h1, n);
  if (net.W1.rows() != h1 || net.W1.cols() != n) throw ValidationError("network.W1: shape does not match n, h1");
  net.b1 = vec(field(doc, "b1", "network"), "network.b1");
  net.b2 = vec(field(doc, "b2", "network"), "network.b2");
  net.w3 = vec(field(doc, "w3", "network"), "network.w3").transpose();

  const json& tj = field(doc, "W2", "network");
  if (!tj.is_array()) throw ParseError("network.W2: expected an array of [row, col, value] triplets");
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t i = 0; i < tj.size(); ++i) {
    const std::string where = "network.W2[" + std::to_string(i) + "]";
    if (!tj[i].is_array() || tj[i].size() != 3) throw ParseError(where + ": expected [row, col, value]");
    const long long r = integer(tj[i][0], where + ".row");
    const long long c = integer(tj[i][1], where + ".col");
    const double val = real(tj[i][2], where + ".value");
    if (r < 0 || r >= h2) throw ValidationError(where + ": row " + std::to_string(r) + " out of range");
    if (c < 0 || c >= h1) throw ValidationError(where + ": column " + std::to_string(c) + " out of range");
    trips.emplace_back(static_cast<int>(r), static_cast<int>(c), val);
  }
  net.W2.resize(h2, h1);
  net.W2.setFromTriplets(trips.begin(), trips.end());

  if (doc.contains("output_bias") && !doc["output_bias"].is_null()) {
    net.output_bias = real(doc["output_bias"], "network.output_bias");
  }
  if (doc.contains("provenance")) {
    const json& pj = doc["provenance"];
    Provenance p;
    const json& hash = field(pj, "mesh_hash", "network.provenance");
    if (!hash.is_string()) throw ParseError("network.provenance.mesh_hash: expected a string");
    p.mesh_hash = hash.get<std::string>();
    p.epsilon = real(field(pj, "epsilon", "network.provenance"), "network.provenance.epsilon");
    p.R = real(field(pj, "R", "network.provenance"), "network.provenance.R");
    p.t0 = reals(field(pj, "t0", "network.provenance"), "network.provenance.t0");
    if (pj.contains("compact_support")) p.compact_support = pj["compact_support"].get<bool>();
    if (pj.contains("cells")) p.cells = static_cast<std::size_t>(integer(pj["cells"], "network.provenance.cells"));
    if (pj.contains("interior_hyperplanes")) {
      p.interior_hyperplanes =
          static_cast<std::size_t>(integer(pj["interior_hyperplanes"], "network.provenance.interior_hyperplanes"));
    }
    if (pj.contains("boundary_hyperplanes")) {
      p.boundary_hyperplanes =
          static_cast<std::size_t>(integer(pj["boundary_hyperplanes"], "network.provenance.boundary_hyperplanes"));
    }
    net.provenance = p;
  }
  validate_network(net);
  return net;
}

ReluNet2 read_network(const std::string& path) { return parse_network(read_text(path)); }

std::string format_network(const ReluNet2& net) {
  json doc;
  doc["arch"] = "fnn2";
  doc["n"] = net.input_dim();
  doc["h1"] = net.h1();
  doc["h2"] = net.h2();
  doc["W1"] = to_json(net.W1);
  doc["b1"] = to_json(net.b1);
  json trips = json::array();
  for (int r = 0; r < net.W2.outerSize(); ++r) {
    for (SparseRowMat::InnerIterator it(net.W2, r); it; ++it) trips.push_back({it.row(), it.col(), it.value()});
  }
  doc["W2"] = trips;
  doc["b2"] = to_json(net.b2);
  doc["w3"] = to_json(net.w3);
  if (net.output_bias) doc["output_bias"] = *net.output_bias;
  if (net.provenance) {
    const Provenance& p = *net.provenance;
    doc["provenance"] = {{"mesh_hash", p.mesh_hash},
                         {"epsilon", p.epsilon},
                         {"R", p.R},
                         {"t0", p.t0},
                         {"compact_support", p.compact_support},
                         {"cells", p.cells},
                         {"interior_hyperplanes", p.interior_hyperplanes},
                         {"boundary_hyperplanes", p.boundary_hyperplanes}};
  }
  return dump(doc);
}

// ---- tnn ----

TensorNet parse_tensor_net(const std::string& text) {
  const json doc = parse_json(text);
  const json& arch = field(doc, "arch", "tnn");
  if (!arch.is_string() || arch.get<std::string>() != "tnn") throw ParseError("tnn.arch: expected \"tnn\"");
  const long long rank = integer(field(doc, "rank", "tnn"), "tnn.rank");
  if (rank < 1) throw ValidationError("tnn.rank: must be >= 1");
  TensorNet net;
  for (int k = 1; doc.contains("branch_" + std::to_string(k)); ++k) {
    const std::string name = "branch_" + std::to_string(k);
    const json& bj = doc[name];
    TensorBranch b;
    b.W = vec(field(bj, "W", "tnn." + name), "tnn." + name + ".W");
    b.b = vec(field(bj, "b", "tnn." + name), "tnn." + name + ".b");
    b.weights = dense(field(bj, "weights", "tnn." + name), "tnn." + name + ".weights");
    if (b.weights.rows() != rank) throw ValidationError("tnn." + name + ".weights: expected " + std::to_string(rank) + " rows");
    net.branches.push_back(std::move(b));
  }
  if (net.branches.empty()) throw ParseError("tnn: missing field 'branch_1'");
  validate_tensor_net(net);
  return net;
}

TensorNet read_tensor_net(const std::string& path) { return parse_tensor_net(read_text(path)); }

std::string format_tensor_net(const TensorNet& net) {
  json doc;
  doc["arch"] = "tnn";
  doc["rank"] = net.rank();
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const auto& b = net.branches[k];
    doc["branch_" + std::to_string(k + 1)] = {{"W", to_json(b.W)}, {"b", to_json(b.b)}, {"weights", to_json(b.weights)}};
  }
  return dump(doc);
}

// ---- tensor fe ----

TensorFE parse_tensor_fe(const std::string& text) {
  const json doc = parse_json(text);
  TensorFE u;
  const json& gj = field(doc, "grids", "tensor_fe");
  if (!gj.is_array() || gj.empty()) throw ParseError("tensor_fe.grids: expected a non-empty array");
  for (std::size_t k = 0; k < gj.size(); ++k) u.mesh.grids.push_back(reals(gj[k], "tensor_fe.grids[" + std::to_string(k) + "]"));
  u.coefficients.shape = u.mesh.shape();
  if (doc.contains("shape")) {
    const json& sj = doc["shape"];
    if (!sj.is_array()) throw ParseError("tensor_fe.shape: expected an array");
    std::vector<std::size_t> declared;
    for (std::size_t k = 0; k < sj.size(); ++k) {
      declared.push_back(static_cast<std::size_t>(integer(sj[k], "tensor_fe.shape[" + std::to_string(k) + "]")));
    }
    if (declared != u.coefficients.shape) throw ValidationError("tensor_fe.shape: does not match the grids");
  }
  u.coefficients.data = reals(field(doc, "coefficients", "tensor_fe"), "tensor_fe.coefficients");
  validate_tensor_fe(u);
  return u;
}

TensorFE read_tensor_fe(const std::string& path) { return parse_tensor_fe(read_text(path)); }

std::string format_tensor_fe(const TensorFE& u) {
  json doc;
  doc["grids"] = u.mesh.grids;
  doc["shape"] = u.coefficients.shape;
  doc["coefficients"] = u.coefficients.data;
  return dump(doc);
}

// ---- points ----

PointSet parse_points(const std::string& text, int dimension) {
  std::vector<double> flat;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (char& ch : line) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError("points line " + std::to_string(lineno) + ": bad number '" + tok + "'");
      }
    }
    if (row.empty()) continue;
    if (static_cast<int>(row.size()) != dimension) {
      throw ValidationError("points line " + std::to_string(lineno) + ": expected " + std::to_string(dimension) +
                            " coordinates");
    }
    flat.insert(flat.end(), row.begin(), row.end());
  }
  const Eigen::Index count = static_cast<Eigen::Index>(flat.size()) / dimension;
  return Eigen::Map<const PointSet>(flat.data(), dimension, count);
}

PointSet read_points(const std::string& path, int dimension) { return parse_points(read_text(path), dimension); }

}  // namespace relufe::io
