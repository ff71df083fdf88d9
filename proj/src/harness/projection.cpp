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

#include "hydra/harness/projection.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <Eigen/SVD>

#include "hydra/harness/config.hpp"

namespace hydra {

namespace {

std::string expand(const std::string& pattern, Index block) {
  std::string out = pattern;
  const std::string token = "{b}";
  for (auto pos = out.find(token); pos != std::string::npos; pos = out.find(token)) {
    out.replace(pos, token.size(), std::to_string(block));
  }
  return out;
}

}  // namespace

std::vector<SliceTerm> parse_selector(const std::string& spec) {
  std::vector<SliceTerm> terms;
  std::size_t begin = 0;
  while (begin <= spec.size()) {
    std::size_t end = spec.find('+', begin);
    if (end == std::string::npos) end = spec.size();
    const std::string item = spec.substr(begin, end - begin);
    begin = end + 1;
    SliceTerm t;
    std::vector<std::string> parts;
    std::stringstream is(item);
    std::string part;
    while (std::getline(is, part, ':')) parts.push_back(part);
    if (parts.size() != 3 || parts[0].empty()) {
      throw SelectorError("selector term '" + item + "' is not <name>:<start>:<count>");
    }
    try {
      std::size_t a = 0, b = 0;
      t.start = std::stoll(parts[1], &a);
      t.count = std::stoll(parts[2], &b);
      if (a != parts[1].size() || b != parts[2].size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw SelectorError("selector term '" + item + "' has a malformed range");
    }
    if (t.start < 0 || t.count < 1) throw SelectorError("selector term '" + item + "' is empty");
    t.pattern = parts[0];
    terms.push_back(std::move(t));
  }
  if (terms.empty()) throw SelectorError("empty selector");
  return terms;
}

Projection pca_2d(const Eigen::MatrixXd& data) {
  Projection p;
  p.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - p.mean.transpose();
  p.components = Eigen::MatrixXd::Zero(data.cols(), 2);
  if (centered.size() > 0) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const Index rank = std::min<Index>(2, svd.singularValues().size());
    for (Index k = 0; k < rank; ++k) {
      if (svd.singularValues()(k) <= 1e-12 * std::max(1.0, svd.singularValues()(0))) break;
      Eigen::VectorXd v = svd.matrixV().col(k);
      for (Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > 1e-12) {
          if (v(i) < 0) v = -v;
          break;
        }
      }
      p.components.col(k) = v;
    }
  }
  const Eigen::MatrixXd coords = centered * p.components;
  p.reconstruction_error = (centered - coords * p.components.transpose()).norm();
  p.points.resize(static_cast<std::size_t>(data.rows()));
  for (Index i = 0; i < data.rows(); ++i) {
    p.points[static_cast<std::size_t>(i)].x = coords(i, 0);
    p.points[static_cast<std::size_t>(i)].y = coords(i, 1);
  }
  return p;
}

Projection project_params(const std::vector<LabeledModel>& models, const std::string& selector) {
  if (models.size() < 2) throw SelectorError("projection needs at least two checkpoints");
  const std::vector<SliceTerm> terms = parse_selector(selector);
  const bool per_block = std::any_of(terms.begin(), terms.end(), [](const SliceTerm& t) {
    return t.pattern.find("{b}") != std::string::npos;
  });
  const Index blocks = per_block ? models.front().second->config.encoder.num_blocks : 1;
  if (blocks < 1) throw SelectorError("selector expands over zero encoder blocks");
  Index dim = 0;
  for (const auto& t : terms) dim += t.count;

  Eigen::MatrixXd data(static_cast<Index>(models.size()) * blocks, dim);
  std::vector<std::pair<std::string, Index>> rows;
  for (const auto& [label, model] : models) {
    for (Index b = 0; b < blocks; ++b) {
      Index col = 0;
      for (const auto& t : terms) {
        const std::string name = expand(t.pattern, b);
        if (!model->params.contains(name)) {
          throw SelectorError("checkpoint " + label + " has no parameter " + name);
        }
        const auto& values = model->params[name].value().values();
        if (t.start + t.count > values.size()) {
          throw SelectorError("slice " + std::to_string(t.start) + ":" + std::to_string(t.count) +
                              " exceeds " + name + " (" + std::to_string(values.size()) +
                              " values) in " + label);
        }
        data.row(static_cast<Index>(rows.size())).segment(col, t.count) =
            values.segment(t.start, t.count).transpose();
        col += t.count;
      }
      rows.emplace_back(label, b);
    }
  }
  Projection p = pca_2d(data);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    p.points[i].label = rows[i].first;
    p.points[i].block = rows[i].second;
  }
  return p;
}

void write_projection(const std::string& dir, const Projection& p) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream csv(fs::path(dir) / "projection.csv");
  if (!csv) throw ConfigError("cannot write projection under " + dir);
  csv << "# format_version=" << kFormatVersion << '\n' << "label,block,x,y\n";
  csv << std::setprecision(17);
  for (const auto& pt : p.points) {
    csv << pt.label << ',' << pt.block << ',' << pt.x << ',' << pt.y << '\n';
  }

  double lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;
  for (const auto& pt : p.points) {
    lo_x = std::min(lo_x, pt.x);
    hi_x = std::max(hi_x, pt.x);
    lo_y = std::min(lo_y, pt.y);
    hi_y = std::max(hi_y, pt.y);
  }
  const double size = 480, margin = 40;
  const double span_x = std::max(hi_x - lo_x, 1e-12), span_y = std::max(hi_y - lo_y, 1e-12);
  const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::map<std::string, std::size_t> colors;
  for (const auto& pt : p.points) colors.emplace(pt.label, colors.size());

  std::ofstream svg(fs::path(dir) / "projection.svg");
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<!-- format_version=" << kFormatVersion << " -->\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * margin + 160
      << "\" height=\"" << size + 2 * margin << "\">\n";
  for (const auto& pt : p.points) {
    const double cx = margin + (pt.x - lo_x) / span_x * size;
    const double cy = margin + size - (pt.y - lo_y) / span_y * size;
    svg << "  <circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"5\" fill=\""
        << palette[colors[pt.label] % 6] << "\"><title>" << pt.label << " block " << pt.block
        << "</title></circle>\n";
  }
  for (const auto& [label, index] : colors) {
    const double y = margin + 20.0 * static_cast<double>(index);
    svg << "  <circle cx=\"" << size + 2 * margin << "\" cy=\"" << y << "\" r=\"5\" fill=\""
        << palette[index % 6] << "\"/>\n"
        << "  <text x=\"" << size + 2 * margin + 10 << "\" y=\"" << y + 4 << "\" font-size=\"12\">"
        << label << "</text>\n";
  }
  svg << "</svg>\n";
}

}  // namespace hydra
