#include "acl/graph.hpp"

#include <algorithm>
#include <cmath>

#include "acl/losses.hpp"

namespace acl {

namespace {

double activate(double x, ActKind kind, double alpha) {
  switch (kind) {
    case ActKind::Relu:
      return x > 0.0 ? x : 0.0;
    case ActKind::Tanh:
      return std::tanh(x);
    case ActKind::LeakyRelu:
      return x > 0.0 ? x : alpha * x;
  }
  return 0.0;
}

// Kink convention: derivative 0 at exactly 0 for ReLU, slope alpha for the
// leaky variant (its left derivative).
double activate_grad(double x, ActKind kind, double alpha) {
  switch (kind) {
    case ActKind::Relu:
      return x > 0.0 ? 1.0 : 0.0;
    case ActKind::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActKind::LeakyRelu:
      return x > 0.0 ? 1.0 : alpha;
  }
  return 0.0;
}

Eigen::Index first_argmax(const Matrix& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.rows(); ++i)
    if (v(i, 0) > v(best, 0)) best = i;
  return best;
}

}  // namespace

int Graph::push(Node n) {
  require(output_ < 0, "Graph: frozen after set_output");
  for (int in : n.inputs)
    require(in >= 0 && in < static_cast<int>(nodes_.size()), "Graph: input id out of range");
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Graph::leaf(const std::string& name) {
  for (const auto& existing : leaf_names_)
    require(existing != name, "Graph: duplicate leaf name " + name);
  Node n;
  n.op = Op::Leaf;
  n.leaf_name = name;
  n.leaf_index = static_cast<int>(leaf_names_.size());
  leaf_names_.push_back(name);
  const int id = push(std::move(n));
  leaf_node_ids_.push_back(id);
  return id;
}

int Graph::find_leaf_node(const std::string& name) const {
  for (std::size_t i = 0; i < leaf_names_.size(); ++i)
    if (leaf_names_[i] == name) return leaf_node_ids_[i];
  return -1;
}

int Graph::constant(Tensor value) {
  Node n;
  n.op = Op::Const;
  n.constant = std::move(value);
  return push(std::move(n));
}

int Graph::affine(int weight, int input) {
  Node n;
  n.op = Op::Affine;
  n.inputs = {weight, input};
  return push(std::move(n));
}

int Graph::activation(int input, ActKind kind, double leaky_alpha) {
  Node n;
  n.op = Op::Activation;
  n.inputs = {input};
  n.act = kind;
  n.coeff = leaky_alpha;
  return push(std::move(n));
}

int Graph::dot(int a, int b) {
  Node n;
  n.op = Op::Dot;
  n.inputs = {a, b};
  return push(std::move(n));
}

int Graph::add(int a, int b) {
  Node n;
  n.op = Op::Add;
  n.inputs = {a, b};
  return push(std::move(n));
}

int Graph::scale(int input, double c) {
  Node n;
  n.op = Op::Scale;
  n.inputs = {input};
  n.coeff = c;
  return push(std::move(n));
}

int Graph::vector_max(int input) {
  Node n;
  n.op = Op::VectorMax;
  n.inputs = {input};
  return push(std::move(n));
}

int Graph::pack(const std::vector<int>& scalars) {
  require(!scalars.empty(), "Graph: pack needs at least one input");
  Node n;
  n.op = Op::Pack;
  n.inputs = scalars;
  return push(std::move(n));
}

int Graph::hinge_reduce(int scores) {
  Node n;
  n.op = Op::HingeReduce;
  n.inputs = {scores};
  return push(std::move(n));
}

int Graph::logistic_reduce(int scores) {
  Node n;
  n.op = Op::LogisticReduce;
  n.inputs = {scores};
  return push(std::move(n));
}

void Graph::set_output(int id) {
  require(id >= 0 && id < static_cast<int>(nodes_.size()), "Graph: bad output id");
  output_ = id;
}

int Graph::leaf_index(const std::string& name) const {
  for (std::size_t i = 0; i < leaf_names_.size(); ++i)
    if (leaf_names_[i] == name) return static_cast<int>(i);
  throw std::invalid_argument("Graph: unknown leaf " + name);
}

void Graph::forward(const Bindings& bindings, Workspace& ws) const {
  require(output_ >= 0, "Graph: output not set");
  ws.values.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    Tensor& out = ws.values[i];
    switch (n.op) {
      case Op::Leaf: {
        const Tensor* bound = bindings.get(n.leaf_index);
        require(bound != nullptr, "Graph: unbound leaf " + n.leaf_name);
        out = *bound;
        break;
      }
      case Op::Const:
        out = n.constant;
        break;
      case Op::Affine: {
        const Tensor& w = ws.values[n.inputs[0]];
        const Tensor& x = ws.values[n.inputs[1]];
        require(w.is_matrix() && x.is_vector(), "affine: expected matrix * vector");
        require(w.mat().cols() == x.mat().rows(), "affine: shape mismatch");
        out = Tensor::vector(w.mat() * x.mat().col(0));
        break;
      }
      case Op::Activation: {
        const Tensor& x = ws.values[n.inputs[0]];
        Matrix y = x.mat();
        for (Eigen::Index r = 0; r < y.rows(); ++r)
          for (Eigen::Index c = 0; c < y.cols(); ++c) y(r, c) = activate(y(r, c), n.act, n.coeff);
        out = x.is_vector() ? Tensor::vector(y.col(0)) : Tensor::matrix(std::move(y));
        break;
      }
      case Op::Dot: {
        const Tensor& a = ws.values[n.inputs[0]];
        const Tensor& b = ws.values[n.inputs[1]];
        require(a.is_vector() && b.is_vector() && a.mat().rows() == b.mat().rows(),
                "dot: shape mismatch");
        out = Tensor::scalar(a.mat().col(0).dot(b.mat().col(0)));
        break;
      }
      case Op::Add: {
        const Tensor& a = ws.values[n.inputs[0]];
        const Tensor& b = ws.values[n.inputs[1]];
        require(a.rank() == b.rank() && a.mat().rows() == b.mat().rows() &&
                    a.mat().cols() == b.mat().cols(),
                "add: shape mismatch");
        Tensor t = a;
        t.mat() += b.mat();
        out = std::move(t);
        break;
      }
      case Op::Scale: {
        Tensor t = ws.values[n.inputs[0]];
        t.mat() *= n.coeff;
        out = std::move(t);
        break;
      }
      case Op::VectorMax: {
        const Tensor& v = ws.values[n.inputs[0]];
        require(v.is_vector() && v.mat().rows() > 0, "vector_max: expected non-empty vector");
        out = Tensor::scalar(v.mat()(first_argmax(v.mat()), 0));
        break;
      }
      case Op::Pack: {
        Vector v(static_cast<Eigen::Index>(n.inputs.size()));
        for (std::size_t j = 0; j < n.inputs.size(); ++j) {
          const Tensor& s = ws.values[n.inputs[j]];
          require(s.is_scalar(), "pack: inputs must be scalars");
          v[static_cast<Eigen::Index>(j)] = s.scalar_value();
        }
        out = Tensor::vector(std::move(v));
        break;
      }
      case Op::HingeReduce: {
        const Tensor& v = ws.values[n.inputs[0]];
        require(v.is_vector() && v.mat().rows() > 0, "hinge_reduce: expected non-empty vector");
        out = Tensor::scalar(hinge_loss(v.mat().col(0)));
        break;
      }
      case Op::LogisticReduce: {
        const Tensor& v = ws.values[n.inputs[0]];
        require(v.is_vector() && v.mat().rows() > 0, "logistic_reduce: expected non-empty vector");
        out = Tensor::scalar(logistic_loss(v.mat().col(0)));
        break;
      }
    }
  }
}

double Graph::evaluate(const Bindings& bindings, Workspace& ws) const {
  forward(bindings, ws);
  const Tensor& out = ws.values[output_];
  require(out.is_scalar(), "Graph: output node is not scalar");
  return out.scalar_value();
}

double Graph::evaluate(const std::map<std::string, Tensor>& bindings) const {
  Bindings b(*this);
  for (const auto& [name, value] : bindings) b.set(name, value);
  Workspace ws;
  return evaluate(b, ws);
}

void Graph::gradient(const Bindings& bindings, const std::vector<int>& wrt_leaves,
                     std::vector<Tensor>& out, Workspace& ws) const {
  forward(bindings, ws);
  require(ws.values[output_].is_scalar(), "Graph: gradient requires scalar output");

  // Mark the subgraph that can influence a requested leaf.
  ws.needed.assign(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.op == Op::Leaf &&
        std::find(wrt_leaves.begin(), wrt_leaves.end(), n.leaf_index) != wrt_leaves.end())
      ws.needed[i] = 1;
    for (int in : n.inputs)
      if (ws.needed[in]) ws.needed[i] = 1;
  }

  ws.adjoints.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!ws.needed[i]) continue;
    ws.adjoints[i] = Tensor::zeros_like(ws.values[i]);
  }
  if (ws.needed[output_]) ws.adjoints[output_].mat()(0, 0) = 1.0;

  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    if (!ws.needed[i]) continue;
    const Node& n = nodes_[i];
    const Tensor& g = ws.adjoints[i];
    switch (n.op) {
      case Op::Leaf:
      case Op::Const:
        break;
      case Op::Affine: {
        const int wi = n.inputs[0], xi = n.inputs[1];
        const Matrix& gv = g.mat();
        if (ws.needed[wi])
          ws.adjoints[wi].mat().noalias() += gv.col(0) * ws.values[xi].mat().col(0).transpose();
        if (ws.needed[xi])
          ws.adjoints[xi].mat().noalias() += ws.values[wi].mat().transpose() * gv.col(0);
        break;
      }
      case Op::Activation: {
        const int xi = n.inputs[0];
        if (!ws.needed[xi]) break;
        const Matrix& x = ws.values[xi].mat();
        Matrix& gx = ws.adjoints[xi].mat();
        for (Eigen::Index r = 0; r < x.rows(); ++r)
          for (Eigen::Index c = 0; c < x.cols(); ++c)
            gx(r, c) += g.mat()(r, c) * activate_grad(x(r, c), n.act, n.coeff);
        break;
      }
      case Op::Dot: {
        const int ai = n.inputs[0], bi = n.inputs[1];
        const double gs = g.mat()(0, 0);
        if (ws.needed[ai]) ws.adjoints[ai].mat().noalias() += gs * ws.values[bi].mat();
        if (ws.needed[bi]) ws.adjoints[bi].mat().noalias() += gs * ws.values[ai].mat();
        break;
      }
      case Op::Add: {
        for (int in : n.inputs)
          if (ws.needed[in]) ws.adjoints[in].mat() += g.mat();
        break;
      }
      case Op::Scale: {
        const int xi = n.inputs[0];
        if (ws.needed[xi]) ws.adjoints[xi].mat() += n.coeff * g.mat();
        break;
      }
      case Op::VectorMax: {
        const int xi = n.inputs[0];
        if (!ws.needed[xi]) break;
        ws.adjoints[xi].mat()(first_argmax(ws.values[xi].mat()), 0) += g.mat()(0, 0);
        break;
      }
      case Op::Pack: {
        for (std::size_t j = 0; j < n.inputs.size(); ++j)
          if (ws.needed[n.inputs[j]])
            ws.adjoints[n.inputs[j]].mat()(0, 0) += g.mat()(static_cast<Eigen::Index>(j), 0);
        break;
      }
      case Op::HingeReduce: {
        const int vi = n.inputs[0];
        if (!ws.needed[vi]) break;
        const Matrix& v = ws.values[vi].mat();
        Eigen::Index worst = 0;
        for (Eigen::Index r = 1; r < v.rows(); ++r)
          if (v(r, 0) < v(worst, 0)) worst = r;
        if (1.0 - v(worst, 0) > 0.0) ws.adjoints[vi].mat()(worst, 0) -= g.mat()(0, 0);
        break;
      }
      case Op::LogisticReduce: {
        const int vi = n.inputs[0];
        if (!ws.needed[vi]) break;
        const Matrix& v = ws.values[vi].mat();
        double shift = 0.0;  // log-sum-exp over {0} u {-v_i}
        for (Eigen::Index r = 0; r < v.rows(); ++r) shift = std::max(shift, -v(r, 0));
        double denom = std::exp(-shift);
        for (Eigen::Index r = 0; r < v.rows(); ++r) denom += std::exp(-v(r, 0) - shift);
        const double gs = g.mat()(0, 0) / std::log(2.0);
        for (Eigen::Index r = 0; r < v.rows(); ++r)
          ws.adjoints[vi].mat()(r, 0) -= gs * std::exp(-v(r, 0) - shift) / denom;
        break;
      }
    }
  }

  out.resize(wrt_leaves.size());
  for (std::size_t j = 0; j < wrt_leaves.size(); ++j) {
    bool found = false;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].op == Op::Leaf && nodes_[i].leaf_index == wrt_leaves[j]) {
        out[j] = ws.adjoints[i];
        found = true;
        break;
      }
    }
    require(found, "Graph: gradient requested for unknown leaf index");
  }
}

std::map<std::string, Tensor> Graph::gradient(const std::map<std::string, Tensor>& bindings,
                                              const std::vector<std::string>& wrt) const {
  Bindings b(*this);
  for (const auto& [name, value] : bindings) b.set(name, value);
  std::vector<int> idx;
  idx.reserve(wrt.size());
  for (const auto& name : wrt) idx.push_back(leaf_index(name));
  Workspace ws;
  std::vector<Tensor> grads;
  gradient(b, idx, grads, ws);
  std::map<std::string, Tensor> out;
  for (std::size_t j = 0; j < wrt.size(); ++j) out[wrt[j]] = grads[j];
  return out;
}

}  // namespace acl
