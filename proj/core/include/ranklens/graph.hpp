#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ranklens/rng.hpp"
#include "ranklens/tensor.hpp"

namespace ranklens {

enum class LayerKind : int {
    Input = 0,
    Dense,
    Activation,
    Conv2D,
    MaxPool2D,
    KMaxPool,
    Concat,
    SoftmaxGate,
    WeightedSum,
};

enum class ActKind : int { Tanh = 0, Relu, Sigmoid };

std::string to_string(LayerKind kind);

// One node of the feed-forward DAG. Parameter tensors are owned here; shape
// parameters that depend on the instance (matrix width, query length) are
// resolved at forward time, so one parameter set serves variable-size inputs.
struct Layer {
    LayerKind kind = LayerKind::Input;
    std::vector<int> inputs;  // producer node ids, all smaller than this node's id

    std::string slot;  // Input: name of the bound input tensor

    Tensor weight;          // Dense: (out, in)
    Tensor bias;            // Dense: (out)
    bool flatten = false;   // Dense: treat the whole input as one vector

    ActKind act = ActKind::Tanh;  // Activation

    Tensor kernel;     // Conv2D: (out_c, in_c, kh, kw), zero-padded "same" geometry
    Tensor conv_bias;  // Conv2D: (out_c)

    std::size_t pool_rows = 0, pool_cols = 0;  // MaxPool2D target grid
    std::size_t kmax = 0;                      // KMaxPool
};

// Nodes are stored in topological order by construction: every add_* takes
// already-existing producer ids. The output must evaluate to a scalar.
class ComputeGraph {
  public:
    int add_input(const std::string& slot);
    int add_dense(int input, std::size_t in_features, std::size_t out_features, Rng& rng,
                  bool flatten = false);
    int add_activation(int input, ActKind act);
    int add_conv2d(int input, std::size_t in_channels, std::size_t out_channels, std::size_t kh,
                   std::size_t kw, Rng& rng);
    int add_maxpool2d(int input, std::size_t pool_rows, std::size_t pool_cols);
    int add_kmax_pool(int input, std::size_t k);
    int add_concat(const std::vector<int>& inputs);
    int add_softmax_gate(int input);
    int add_weighted_sum(int weights, int values);
    void set_output(int node);

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }
    int output_node() const { return output_; }
    const std::vector<std::string>& input_slots() const { return slots_; }

    // Mutable views of every parameter tensor, in a fixed order. Used by the
    // trainer and by finite-difference checks.
    std::vector<Tensor*> parameter_tensors();

  private:
    int push(Layer layer);
    std::vector<Layer> layers_;
    std::vector<std::string> slots_;
    int output_ = -1;
};

// Everything one forward pass saw: the bound inputs and every node output.
// Replaying forward on trace.inputs reproduces trace.outputs exactly.
struct ActivationTrace {
    std::map<std::string, Tensor> inputs;
    std::vector<Tensor> outputs;
};

// Deterministic forward evaluation. Shape mismatches throw numeric_error
// naming the offending layer.
double forward(const ComputeGraph& graph, const std::map<std::string, Tensor>& inputs,
               ActivationTrace* trace = nullptr);

// DeepLIFT rescale-rule backward pass between two traces of the same graph.
// Returns per-slot contribution tensors (multiplier times input delta);
// their grand total equals score(input) - score(reference) up to the
// documented 1e-9-scale stabilization slack.
//
// Rules per layer kind: exact linear multipliers for
// Dense/Conv2D/Concat, rescale (delta-out / delta-in, gradient fallback below
// 1e-9) for activations and the softmax gate, input-trace argmax routing for
// the pooling layers, and the symmetric bilinear split for WeightedSum.
std::map<std::string, Tensor> deeplift_contributions(const ComputeGraph& graph,
                                                     const ActivationTrace& input_trace,
                                                     const ActivationTrace& ref_trace);

// Parameter gradients of the (scalar) graph output, accumulated via standard
// backprop. Index-parallel with graph.layers().
struct Gradients {
    std::vector<Tensor> weight, bias, kernel, conv_bias;
    void init_like(const ComputeGraph& graph);
    void scale(double factor);
};

// Accumulates d(output)/d(parameters) * upstream into grads.
void accumulate_gradients(const ComputeGraph& graph, const ActivationTrace& trace, double upstream,
                          Gradients& grads);

struct TrainingPair {
    std::map<std::string, Tensor> relevant;
    std::map<std::string, Tensor> non_relevant;
};

struct TrainOptions {
    double learning_rate = 0.05;
    std::size_t epochs = 10;
    double margin = 1.0;
    std::size_t batch_size = 8;
    std::uint64_t seed = 1;
};

struct TrainStats {
    std::vector<double> epoch_loss;  // mean hinge loss per epoch, pre-update
};

// Mini-batch SGD on hinge loss max(0, margin - s+ + s-). Deterministic under
// a fixed seed. Throws numeric_error with diagnostics if the loss goes
// non-finite.
TrainStats train_pairwise(ComputeGraph& graph, const std::vector<TrainingPair>& pairs,
                          const TrainOptions& options);

// Versioned JSON checkpoint; round-trips doubles exactly.
std::string serialize_graph(const ComputeGraph& graph);
ComputeGraph deserialize_graph(const std::string& json_text);

}  // namespace ranklens
