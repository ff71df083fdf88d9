// Copyright 2026 The Hydra Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hydra/model.hpp"

namespace hydra {

/// One slice term: a parameter name pattern where "{b}" expands to every
/// encoder block index, plus a [start, start + count) range over the
/// flattened values. A selector joins terms with '+'; per block, the terms'
/// slices are concatenated into one vector.
struct SliceTerm {
  std::string pattern;
  Index start = 0;
  Index count = 0;
};

std::vector<SliceTerm> parse_selector(const std::string& spec);

struct ProjectedPoint {
  std::string label;
  Index block = 0;
  double x = 0.0;
  double y = 0.0;
};

struct Projection {
  std::vector<ProjectedPoint> points;
  Eigen::MatrixXd components;   // (dim, 2) principal directions
  Eigen::VectorXd mean;
  double reconstruction_error = 0.0;  // Frobenius norm of the rank-2 residual
};

/// Mean-centred PCA of the rows of `data` onto two components. Each
/// component's first nonzero loading is made positive.
Projection pca_2d(const Eigen::MatrixXd& data);

using LabeledModel = std::pair<std::string, const ModelState*>;

/// Stacks the selected slices of every (model, block) pair and projects
/// them; SelectorError when a name or range does not resolve in every model.
Projection project_params(const std::vector<LabeledModel>& models, const std::string& selector);

/// Writes projection.csv and projection.svg under `dir`.
void write_projection(const std::string& dir, const Projection& projection);

}  // namespace hydra
