#pragma once

#include <string>

#include "relufe/mesh.hpp"
#include "relufe/network.hpp"
#include "relufe/pwl.hpp"
#include "relufe/tensorfe.hpp"
#include "relufe/types.hpp"

namespace relufe::io {

// All readers throw ParseError naming the offending field, or
// ValidationError when the document parses but is inconsistent.

PolytopeMesh read_mesh(const std::string& path);
PolytopeMesh parse_mesh(const std::string& text);
std::string format_mesh(const PolytopeMesh& mesh);

PiecewiseLinear read_function(const std::string& path, const PolytopeMesh& mesh);
PiecewiseLinear parse_function(const std::string& text, const PolytopeMesh& mesh);
std::string format_function(const PiecewiseLinear& v);

ReluNet2 read_network(const std::string& path);
ReluNet2 parse_network(const std::string& text);
std::string format_network(const ReluNet2& net);

TensorNet read_tensor_net(const std::string& path);
TensorNet parse_tensor_net(const std::string& text);
std::string format_tensor_net(const TensorNet& net);

TensorFE read_tensor_fe(const std::string& path);
TensorFE parse_tensor_fe(const std::string& text);
std::string format_tensor_fe(const TensorFE& u);

/// Whitespace or comma separated reals, one point per line; '#' starts a comment.
PointSet read_points(const std::string& path, int dimension);
PointSet parse_points(const std::string& text, int dimension);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace relufe::io
