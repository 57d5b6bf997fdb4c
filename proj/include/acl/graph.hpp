#pragma once

#include <map>
#include <string>
#include <vector>

#include "acl/tensor.hpp"

namespace acl {

enum class Op {
  Leaf,
  Const,
  Affine,       // matrix * vector
  Activation,   // elementwise sigma, sigma(0) = 0 except Tanh which also obeys it
  Dot,          // inner product of two vectors
  Add,          // elementwise sum, equal shapes
  Scale,        // constant * tensor
  VectorMax,    // max coordinate of a vector; first maximal index on ties
  Pack,         // scalars -> vector
  HingeReduce,  // v -> max{0, 1 + max_i(-v_i)}
  LogisticReduce  // v -> log2(1 + sum_i exp(-v_i))
};

enum class ActKind { Relu, Tanh, LeakyRelu };

struct Node {
  Op op = Op::Const;
  std::vector<int> inputs;
  double coeff = 1.0;  // Scale factor / LeakyRelu slope
  ActKind act = ActKind::Relu;
  Tensor constant;
  std::string leaf_name;
  int leaf_index = -1;
};

// Straight-line computation graph over the primitive set above. The node list
// is the evaluation order; nodes only reference earlier nodes, so the graph is
// acyclic by construction. Once `set_output` has been called the graph is
// immutable and evaluate/gradient are pure.
class Graph {
 public:
  int leaf(const std::string& name);
  int constant(Tensor value);
  int constant_scalar(double v) { return constant(Tensor::scalar(v)); }
  int constant_vector(const Vector& v) { return constant(Tensor::vector(v)); }
  int affine(int weight, int input);
  int activation(int input, ActKind kind, double leaky_alpha = 0.01);
  int dot(int a, int b);
  int add(int a, int b);
  int sub(int a, int b) { return add(a, scale(b, -1.0)); }
  int scale(int input, double c);
  int vector_max(int input);
  int pack(const std::vector<int>& scalars);
  int hinge_reduce(int scores);
  int logistic_reduce(int scores);
  void set_output(int id);

  int output() const { return output_; }
  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_leaves() const { return leaf_names_.size(); }
  const std::vector<std::string>& leaf_names() const { return leaf_names_; }
  int leaf_index(const std::string& name) const;
  // Node id of an existing leaf, or -1 when absent.
  int find_leaf_node(const std::string& name) const;

  // Reusable per-call evaluation buffers; one workspace per concurrent caller.
  struct Workspace {
    std::vector<Tensor> values;
    std::vector<Tensor> adjoints;
    std::vector<char> needed;
  };

  // Bindings are indexed by leaf registration order.
  class Bindings {
   public:
    explicit Bindings(const Graph& g) : graph_(&g), slots_(g.num_leaves(), nullptr) {}
    void set(const std::string& name, const Tensor& value) {
      slots_[static_cast<std::size_t>(graph_->leaf_index(name))] = &value;
    }
    void set(int leaf_idx, const Tensor& value) {
      slots_[static_cast<std::size_t>(leaf_idx)] = &value;
    }
    const Tensor* get(int leaf_idx) const { return slots_[static_cast<std::size_t>(leaf_idx)]; }

   private:
    const Graph* graph_;
    std::vector<const Tensor*> slots_;
  };

  double evaluate(const Bindings& bindings, Workspace& ws) const;
  double evaluate(const std::map<std::string, Tensor>& bindings) const;

  // d(output)/d(leaf) for the requested leaves; output must be scalar.
  // Subgradient conventions: derivative 0 exactly at hinge/ReLU kinks, first
  // maximal index for vector max ties.
  void gradient(const Bindings& bindings, const std::vector<int>& wrt_leaves,
                std::vector<Tensor>& out, Workspace& ws) const;
  std::map<std::string, Tensor> gradient(const std::map<std::string, Tensor>& bindings,
                                         const std::vector<std::string>& wrt) const;

 private:
  int push(Node n);
  void forward(const Bindings& bindings, Workspace& ws) const;

  std::vector<Node> nodes_;
  std::vector<std::string> leaf_names_;
  std::vector<int> leaf_node_ids_;
  int output_ = -1;
};

}  // namespace acl
