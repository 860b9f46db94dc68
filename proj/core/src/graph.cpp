#include "ranklens/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "ranklens/errors.hpp"

namespace ranklens {

namespace {

// Below this input delta the rescale ratio is numerically meaningless and we
// fall back to the local gradient. The mass this can lose per element is
// bounded by |multiplier| * 1e-9, far inside every conservation tolerance.
constexpr double kRescaleEps = 1e-9;

double apply_act(ActKind act, double x) {
    switch (act) {
        case ActKind::Tanh: return std::tanh(x);
        case ActKind::Relu: return x > 0.0 ? x : 0.0;
        case ActKind::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    }
    return 0.0;
}

double act_grad(ActKind act, double x) {
    switch (act) {
        case ActKind::Tanh: {
            double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case ActKind::Relu: return x > 0.0 ? 1.0 : 0.0;
        case ActKind::Sigmoid: {
            double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s);
        }
    }
    return 0.0;
}

[[noreturn]] void shape_fail(int node, LayerKind kind, const std::string& what) {
    throw numeric_error("layer " + std::to_string(node) + " (" + to_string(kind) + "): " + what);
}

// Partition [0, extent) into `parts` contiguous windows; window p is
// [floor(p*extent/parts), floor((p+1)*extent/parts)). Empty when extent < parts.
std::pair<std::size_t, std::size_t> pool_window(std::size_t p, std::size_t parts, std::size_t extent) {
    return {p * extent / parts, (p + 1) * extent / parts};
}

struct Rank3 {
    std::size_t c, h, w;
};

Rank3 as_rank3(const Tensor& t, int node, LayerKind kind) {
    if (t.rank() == 3) return {t.shape[0], t.shape[1], t.shape[2]};
    if (t.rank() == 2) return {1, t.shape[0], t.shape[1]};
    shape_fail(node, kind, "expected rank-2 or rank-3 input");
}

}  // namespace

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Input: return "input";
        case LayerKind::Dense: return "dense";
        case LayerKind::Activation: return "activation";
        case LayerKind::Conv2D: return "conv2d";
        case LayerKind::MaxPool2D: return "maxpool2d";
        case LayerKind::KMaxPool: return "kmax-pool";
        case LayerKind::Concat: return "concat";
        case LayerKind::SoftmaxGate: return "softmax-gate";
        case LayerKind::WeightedSum: return "weighted-sum";
    }
    return "?";
}

int ComputeGraph::push(Layer layer) {
    for (int in : layer.inputs) {
        if (in < 0 || in >= static_cast<int>(layers_.size())) {
            throw numeric_error("graph wiring references an undefined node");
        }
    }
    layers_.push_back(std::move(layer));
    return static_cast<int>(layers_.size()) - 1;
}

int ComputeGraph::add_input(const std::string& slot) {
    Layer l;
    l.kind = LayerKind::Input;
    l.slot = slot;
    slots_.push_back(slot);
    return push(std::move(l));
}

int ComputeGraph::add_dense(int input, std::size_t in_features, std::size_t out_features, Rng& rng,
                            bool flatten) {
    Layer l;
    l.kind = LayerKind::Dense;
    l.inputs = {input};
    l.flatten = flatten;
    l.weight = Tensor({out_features, in_features});
    double scale = 1.0 / std::sqrt(static_cast<double>(in_features));
    for (double& w : l.weight.data) w = rng.next_gaussian() * scale;
    l.bias = Tensor({out_features});
    return push(std::move(l));
}

int ComputeGraph::add_activation(int input, ActKind act) {
    Layer l;
    l.kind = LayerKind::Activation;
    l.inputs = {input};
    l.act = act;
    return push(std::move(l));
}

int ComputeGraph::add_conv2d(int input, std::size_t in_channels, std::size_t out_channels,
                             std::size_t kh, std::size_t kw, Rng& rng) {
    Layer l;
    l.kind = LayerKind::Conv2D;
    l.inputs = {input};
    l.kernel = Tensor({out_channels, in_channels, kh, kw});
    double scale = 1.0 / std::sqrt(static_cast<double>(in_channels * kh * kw));
    for (double& w : l.kernel.data) w = rng.next_gaussian() * scale;
    l.conv_bias = Tensor({out_channels});
    return push(std::move(l));
}

int ComputeGraph::add_maxpool2d(int input, std::size_t pool_rows, std::size_t pool_cols) {
    Layer l;
    l.kind = LayerKind::MaxPool2D;
    l.inputs = {input};
    l.pool_rows = pool_rows;
    l.pool_cols = pool_cols;
    return push(std::move(l));
}

int ComputeGraph::add_kmax_pool(int input, std::size_t k) {
    Layer l;
    l.kind = LayerKind::KMaxPool;
    l.inputs = {input};
    l.kmax = k;
    return push(std::move(l));
}

int ComputeGraph::add_concat(const std::vector<int>& inputs) {
    Layer l;
    l.kind = LayerKind::Concat;
    l.inputs = inputs;
    return push(std::move(l));
}

int ComputeGraph::add_softmax_gate(int input) {
    Layer l;
    l.kind = LayerKind::SoftmaxGate;
    l.inputs = {input};
    return push(std::move(l));
}

int ComputeGraph::add_weighted_sum(int weights, int values) {
    Layer l;
    l.kind = LayerKind::WeightedSum;
    l.inputs = {weights, values};
    return push(std::move(l));
}

void ComputeGraph::set_output(int node) {
    if (node < 0 || node >= static_cast<int>(layers_.size())) {
        throw numeric_error("output node out of range");
    }
    output_ = node;
}

std::vector<Tensor*> ComputeGraph::parameter_tensors() {
    std::vector<Tensor*> params;
    for (Layer& l : layers_) {
        if (l.kind == LayerKind::Dense) {
            params.push_back(&l.weight);
            params.push_back(&l.bias);
        } else if (l.kind == LayerKind::Conv2D) {
            params.push_back(&l.kernel);
            params.push_back(&l.conv_bias);
        }
    }
    return params;
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

namespace {

Tensor forward_dense(const Layer& l, const Tensor& x, int node) {
    std::size_t out_f = l.weight.shape[0];
    std::size_t in_f = l.weight.shape[1];
    std::size_t rows;
    if (l.flatten) {
        if (x.size() != in_f) shape_fail(node, l.kind, "flatten input size mismatch");
        rows = 1;
    } else {
        if (x.rank() == 0 || x.shape.back() != in_f) shape_fail(node, l.kind, "last dim mismatch");
        rows = x.size() / in_f;
    }
    std::vector<std::size_t> out_shape;
    if (l.flatten) {
        out_shape = {out_f};
    } else {
        out_shape = x.shape;
        out_shape.back() = out_f;
    }
    Tensor y(out_shape);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x.data.data() + r * in_f;
        double* yr = y.data.data() + r * out_f;
        for (std::size_t o = 0; o < out_f; ++o) {
            double acc = l.bias.data[o];
            const double* w = l.weight.data.data() + o * in_f;
            for (std::size_t i = 0; i < in_f; ++i) acc += w[i] * xr[i];
            yr[o] = acc;
        }
    }
    return y;
}

Tensor forward_conv2d(const Layer& l, const Tensor& x, int node) {
    Rank3 d = as_rank3(x, node, l.kind);
    std::size_t out_c = l.kernel.shape[0], in_c = l.kernel.shape[1];
    std::size_t kh = l.kernel.shape[2], kw = l.kernel.shape[3];
    if (d.c != in_c) shape_fail(node, l.kind, "channel mismatch");
    std::size_t pad_t = (kh - 1) / 2, pad_l = (kw - 1) / 2;
    Tensor y({out_c, d.h, d.w});
    for (std::size_t oc = 0; oc < out_c; ++oc) {
        for (std::size_t i = 0; i < d.h; ++i) {
            for (std::size_t j = 0; j < d.w; ++j) {
                double acc = l.conv_bias.data[oc];
                for (std::size_t ic = 0; ic < in_c; ++ic) {
                    for (std::size_t u = 0; u < kh; ++u) {
                        std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(i + u) - static_cast<std::ptrdiff_t>(pad_t);
                        if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(d.h)) continue;
                        for (std::size_t v = 0; v < kw; ++v) {
                            std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(j + v) - static_cast<std::ptrdiff_t>(pad_l);
                            if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(d.w)) continue;
                            acc += l.kernel.data[((oc * in_c + ic) * kh + u) * kw + v] *
                                   x.data[(ic * d.h + static_cast<std::size_t>(ii)) * d.w +
                                          static_cast<std::size_t>(jj)];
                        }
                    }
                }
                y.at(oc, i, j) = acc;
            }
        }
    }
    return y;
}

Tensor forward_maxpool(const Layer& l, const Tensor& x, int node) {
    Rank3 d = as_rank3(x, node, l.kind);
    Tensor y({d.c, l.pool_rows, l.pool_cols});
    for (std::size_t c = 0; c < d.c; ++c) {
        for (std::size_t p = 0; p < l.pool_rows; ++p) {
            auto [r0, r1] = pool_window(p, l.pool_rows, d.h);
            for (std::size_t q = 0; q < l.pool_cols; ++q) {
                auto [c0, c1] = pool_window(q, l.pool_cols, d.w);
                double best = 0.0;  // empty windows stay at the zero fill
                bool any = false;
                for (std::size_t i = r0; i < r1; ++i) {
                    for (std::size_t j = c0; j < c1; ++j) {
                        double v = x.data[(c * d.h + i) * d.w + j];
                        if (!any || v > best) {
                            best = v;
                            any = true;
                        }
                    }
                }
                y.at(c, p, q) = any ? best : 0.0;
            }
        }
    }
    return y;
}

// Positions of the k largest values in the row, ties resolved to the lowest
// column index, result ordered by descending value.
std::vector<std::size_t> kmax_positions(const double* row, std::size_t width, std::size_t k) {
    std::vector<std::size_t> idx(width);
    for (std::size_t i = 0; i < width; ++i) idx[i] = i;
    std::size_t take = std::min(k, width);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (row[a] != row[b]) return row[a] > row[b];
                          return a < b;
                      });
    idx.resize(take);
    return idx;
}

Tensor forward_kmax(const Layer& l, const Tensor& x, int node) {
    Rank3 d = as_rank3(x, node, l.kind);
    Tensor y({d.c, d.h, l.kmax});
    for (std::size_t c = 0; c < d.c; ++c) {
        for (std::size_t h = 0; h < d.h; ++h) {
            const double* row = x.data.data() + (c * d.h + h) * d.w;
            auto pos = kmax_positions(row, d.w, l.kmax);
            for (std::size_t j = 0; j < pos.size(); ++j) y.at(c, h, j) = row[pos[j]];
            // slots beyond the row width stay zero-filled
        }
    }
    return y;
}

Tensor forward_concat(const Layer& l, const std::vector<const Tensor*>& xs, int node) {
    if (xs.empty()) shape_fail(node, l.kind, "concat of nothing");
    std::vector<std::size_t> lead = xs[0]->shape;
    lead.pop_back();
    std::size_t total_last = 0;
    for (const Tensor* t : xs) {
        std::vector<std::size_t> tl = t->shape;
        if (tl.empty()) shape_fail(node, l.kind, "concat input must have rank >= 1");
        tl.pop_back();
        if (tl != lead) shape_fail(node, l.kind, "concat leading dims differ");
        total_last += t->shape.back();
    }
    std::vector<std::size_t> out_shape = xs[0]->shape;
    out_shape.back() = total_last;
    Tensor y(out_shape);
    std::size_t rows = y.size() / total_last;
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t offset = 0;
        for (const Tensor* t : xs) {
            std::size_t last = t->shape.back();
            const double* src = t->data.data() + r * last;
            double* dst = y.data.data() + r * total_last + offset;
            std::copy(src, src + last, dst);
            offset += last;
        }
    }
    return y;
}

Tensor forward_softmax(const Tensor& x) {
    Tensor y({x.size()});
    double mx = -1e300;
    for (double v : x.data) mx = std::max(mx, v);
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        y.data[i] = std::exp(x.data[i] - mx);
        sum += y.data[i];
    }
    for (double& v : y.data) v /= sum;
    return y;
}

Tensor forward_weighted_sum(const Tensor& w, const Tensor& v, int node) {
    if (w.size() != v.size()) shape_fail(node, LayerKind::WeightedSum, "weights/values size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += w.data[i] * v.data[i];
    return scalar_tensor(acc);
}

}  // namespace

double forward(const ComputeGraph& graph, const std::map<std::string, Tensor>& inputs,
               ActivationTrace* trace) {
    const auto& layers = graph.layers();
    if (graph.output_node() < 0) throw numeric_error("graph has no output node");
    std::vector<Tensor> outputs(layers.size());

    for (std::size_t n = 0; n < layers.size(); ++n) {
        const Layer& l = layers[n];
        int node = static_cast<int>(n);
        switch (l.kind) {
            case LayerKind::Input: {
                auto it = inputs.find(l.slot);
                if (it == inputs.end()) {
                    throw numeric_error("missing input slot '" + l.slot + "'");
                }
                outputs[n] = it->second;
                break;
            }
            case LayerKind::Dense:
                outputs[n] = forward_dense(l, outputs[l.inputs[0]], node);
                break;
            case LayerKind::Activation: {
                const Tensor& x = outputs[l.inputs[0]];
                Tensor y(x.shape);
                for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = apply_act(l.act, x.data[i]);
                outputs[n] = std::move(y);
                break;
            }
            case LayerKind::Conv2D:
                outputs[n] = forward_conv2d(l, outputs[l.inputs[0]], node);
                break;
            case LayerKind::MaxPool2D:
                outputs[n] = forward_maxpool(l, outputs[l.inputs[0]], node);
                break;
            case LayerKind::KMaxPool:
                outputs[n] = forward_kmax(l, outputs[l.inputs[0]], node);
                break;
            case LayerKind::Concat: {
                std::vector<const Tensor*> xs;
                for (int in : l.inputs) xs.push_back(&outputs[in]);
                outputs[n] = forward_concat(l, xs, node);
                break;
            }
            case LayerKind::SoftmaxGate:
                outputs[n] = forward_softmax(outputs[l.inputs[0]]);
                break;
            case LayerKind::WeightedSum:
                outputs[n] = forward_weighted_sum(outputs[l.inputs[0]], outputs[l.inputs[1]], node);
                break;
        }
    }

    const Tensor& out = outputs[graph.output_node()];
    if (out.size() != 1) throw numeric_error("graph output is not scalar");
    double score = out.data[0];
    if (trace) {
        trace->inputs = inputs;
        trace->outputs = std::move(outputs);
    }
    return score;
}

// ---------------------------------------------------------------------------
// DeepLIFT multipliers
// ---------------------------------------------------------------------------

namespace {

// Routes one pooling cell's output delta onto an input position. Primary
// target is the input-trace selection; if its own delta cannot carry the mass
// we reroute to the largest in-window delta so layer-local conservation holds.
void route_pool_delta(Tensor& m_in, const Tensor& x, const Tensor& r, double m_out, double delta_out,
                      std::size_t primary, const std::size_t* window, std::size_t window_len) {
    if (delta_out == 0.0 || m_out == 0.0) return;
    double dx = x.data[primary] - r.data[primary];
    if (std::abs(dx) >= kRescaleEps) {
        m_in.data[primary] += m_out * delta_out / dx;
        return;
    }
    std::size_t best = primary;
    double best_abs = std::abs(dx);
    for (std::size_t t = 0; t < window_len; ++t) {
        double cand = std::abs(x.data[window[t]] - r.data[window[t]]);
        if (cand > best_abs) {
            best_abs = cand;
            best = window[t];
        }
    }
    if (best_abs >= kRescaleEps) {
        double dxb = x.data[best] - r.data[best];
        m_in.data[best] += m_out * delta_out / dxb;
    }
    // else: |delta_out| <= max in-window |dx| < 1e-9; dropping it is inside
    // the stabilization budget.
}

}  // namespace

std::map<std::string, Tensor> deeplift_contributions(const ComputeGraph& graph,
                                                     const ActivationTrace& input_trace,
                                                     const ActivationTrace& ref_trace) {
    const auto& layers = graph.layers();
    if (input_trace.outputs.size() != layers.size() || ref_trace.outputs.size() != layers.size()) {
        throw numeric_error("trace does not belong to this graph");
    }
    for (std::size_t n = 0; n < layers.size(); ++n) {
        if (!input_trace.outputs[n].same_shape(ref_trace.outputs[n])) {
            throw numeric_error("input and reference traces disagree on shape at layer " +
                                std::to_string(n));
        }
    }

    std::vector<Tensor> mult(layers.size());
    for (std::size_t n = 0; n < layers.size(); ++n) mult[n] = Tensor(input_trace.outputs[n].shape);
    mult[graph.output_node()].data[0] = 1.0;

    std::map<std::string, Tensor> contributions;

    for (std::size_t ni = layers.size(); ni-- > 0;) {
        const Layer& l = layers[ni];
        const Tensor& m_out = mult[ni];
        const Tensor& y_in = input_trace.outputs[ni];
        const Tensor& y_ref = ref_trace.outputs[ni];

        switch (l.kind) {
            case LayerKind::Input: {
                const Tensor& x = input_trace.inputs.at(l.slot);
                const Tensor& r = ref_trace.inputs.at(l.slot);
                if (!x.same_shape(r)) {
                    throw numeric_error("input/reference shape mismatch on slot '" + l.slot + "'");
                }
                Tensor contrib(x.shape);
                for (std::size_t i = 0; i < x.size(); ++i) {
                    contrib.data[i] = m_out.data[i] * (x.data[i] - r.data[i]);
                }
                auto [it, inserted] = contributions.emplace(l.slot, contrib);
                if (!inserted) it->second += contrib;
                break;
            }
            case LayerKind::Dense: {
                const Tensor& x = input_trace.outputs[l.inputs[0]];
                Tensor& m_in = mult[l.inputs[0]];
                std::size_t out_f = l.weight.shape[0], in_f = l.weight.shape[1];
                std::size_t rows = x.size() / in_f;
                for (std::size_t r = 0; r < rows; ++r) {
                    const double* mo = m_out.data.data() + r * out_f;
                    double* mi = m_in.data.data() + r * in_f;
                    for (std::size_t o = 0; o < out_f; ++o) {
                        if (mo[o] == 0.0) continue;
                        const double* w = l.weight.data.data() + o * in_f;
                        for (std::size_t i = 0; i < in_f; ++i) mi[i] += w[i] * mo[o];
                    }
                }
                break;
            }
            case LayerKind::Activation: {
                const Tensor& x = input_trace.outputs[l.inputs[0]];
                const Tensor& r = ref_trace.outputs[l.inputs[0]];
                Tensor& m_in = mult[l.inputs[0]];
                for (std::size_t i = 0; i < x.size(); ++i) {
                    double dx = x.data[i] - r.data[i];
                    double q = std::abs(dx) >= kRescaleEps ? (y_in.data[i] - y_ref.data[i]) / dx
                                                           : act_grad(l.act, x.data[i]);
                    m_in.data[i] += m_out.data[i] * q;
                }
                break;
            }
            case LayerKind::Conv2D: {
                const Tensor& x = input_trace.outputs[l.inputs[0]];
                Tensor& m_in = mult[l.inputs[0]];
                Rank3 d = as_rank3(x, static_cast<int>(ni), l.kind);
                std::size_t out_c = l.kernel.shape[0], in_c = l.kernel.shape[1];
                std::size_t kh = l.kernel.shape[2], kw = l.kernel.shape[3];
                std::size_t pad_t = (kh - 1) / 2, pad_l = (kw - 1) / 2;
                for (std::size_t oc = 0; oc < out_c; ++oc) {
                    for (std::size_t i = 0; i < d.h; ++i) {
                        for (std::size_t j = 0; j < d.w; ++j) {
                            double m = m_out.at(oc, i, j);
                            if (m == 0.0) continue;
                            for (std::size_t ic = 0; ic < in_c; ++ic) {
                                for (std::size_t u = 0; u < kh; ++u) {
                                    std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(i + u) -
                                                        static_cast<std::ptrdiff_t>(pad_t);
                                    if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(d.h)) continue;
                                    for (std::size_t v = 0; v < kw; ++v) {
                                        std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(j + v) -
                                                            static_cast<std::ptrdiff_t>(pad_l);
                                        if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(d.w)) continue;
                                        m_in.data[(ic * d.h + static_cast<std::size_t>(ii)) * d.w +
                                                  static_cast<std::size_t>(jj)] +=
                                            m * l.kernel.data[((oc * in_c + ic) * kh + u) * kw + v];
                                    }
                                }
                            }
                        }
                    }
                }
                break;
            }
            case LayerKind::MaxPool2D: {
                const Tensor& x = input_trace.outputs[l.inputs[0]];
                const Tensor& r = ref_trace.outputs[l.inputs[0]];
                Tensor& m_in = mult[l.inputs[0]];
                Rank3 d = as_rank3(x, static_cast<int>(ni), l.kind);
                std::vector<std::size_t> window;
                for (std::size_t c = 0; c < d.c; ++c) {
                    for (std::size_t p = 0; p < l.pool_rows; ++p) {
                        auto [r0, r1] = pool_window(p, l.pool_rows, d.h);
                        for (std::size_t q = 0; q < l.pool_cols; ++q) {
                            auto [c0, c1] = pool_window(q, l.pool_cols, d.w);
                            if (r0 >= r1 || c0 >= c1) continue;  // zero fill, no delta
                            window.clear();
                            std::size_t sel = 0;
                            double best = -1e300;
                            for (std::size_t i = r0; i < r1; ++i) {
                                for (std::size_t j = c0; j < c1; ++j) {
                                    std::size_t flat = (c * d.h + i) * d.w + j;
                                    window.push_back(flat);
                                    if (x.data[flat] > best) {
                                        best = x.data[flat];
                                        sel = flat;
                                    }
                                }
                            }
                            double delta_out = y_in.at(c, p, q) - y_ref.at(c, p, q);
                            route_pool_delta(m_in, x, r, m_out.at(c, p, q), delta_out, sel,
                                             window.data(), window.size());
                        }
                    }
                }
                break;
            }
            case LayerKind::KMaxPool: {
                const Tensor& x = input_trace.outputs[l.inputs[0]];
                const Tensor& r = ref_trace.outputs[l.inputs[0]];
                Tensor& m_in = mult[l.inputs[0]];
                Rank3 d = as_rank3(x, static_cast<int>(ni), l.kind);
                std::vector<std::size_t> window(d.w);
                for (std::size_t c = 0; c < d.c; ++c) {
                    for (std::size_t h = 0; h < d.h; ++h) {
                        std::size_t base = (c * d.h + h) * d.w;
                        for (std::size_t j = 0; j < d.w; ++j) window[j] = base + j;
                        auto pos = kmax_positions(x.data.data() + base, d.w, l.kmax);
                        for (std::size_t j = 0; j < pos.size(); ++j) {
                            double delta_out = y_in.at(c, h, j) - y_ref.at(c, h, j);
                            route_pool_delta(m_in, x, r, m_out.at(c, h, j), delta_out, base + pos[j],
                                             window.data(), window.size());
                        }
                    }
                }
                break;
            }
            case LayerKind::Concat: {
                std::size_t total_last = y_in.shape.back();
                std::size_t rows = y_in.size() / total_last;
                std::size_t offset = 0;
                for (int in : l.inputs) {
                    Tensor& m_in = mult[in];
                    std::size_t last = input_trace.outputs[in].shape.back();
                    for (std::size_t rr = 0; rr < rows; ++rr) {
                        const double* src = m_out.data.data() + rr * total_last + offset;
                        double* dst = m_in.data.data() + rr * last;
                        for (std::size_t i = 0; i < last; ++i) dst[i] += src[i];
                    }
                    offset += last;
                }
                break;
            }
            case LayerKind::SoftmaxGate: {
                const Tensor& x = input_trace.outputs[l.inputs[0]];
                const Tensor& r = ref_trace.outputs[l.inputs[0]];
                Tensor& m_in = mult[l.inputs[0]];
                for (std::size_t i = 0; i < x.size(); ++i) {
                    double dx = x.data[i] - r.data[i];
                    double q = std::abs(dx) >= kRescaleEps
                                   ? (y_in.data[i] - y_ref.data[i]) / dx
                                   : y_in.data[i] * (1.0 - y_in.data[i]);
                    m_in.data[i] += m_out.data[i] * q;
                }
                break;
            }
            case LayerKind::WeightedSum: {
                const Tensor& w_in = input_trace.outputs[l.inputs[0]];
                const Tensor& w_ref = ref_trace.outputs[l.inputs[0]];
                const Tensor& v_in = input_trace.outputs[l.inputs[1]];
                const Tensor& v_ref = ref_trace.outputs[l.inputs[1]];
                Tensor& m_w = mult[l.inputs[0]];
                Tensor& m_v = mult[l.inputs[1]];
                double m = m_out.data[0];
                // Symmetric bilinear split: exact for products, so the
                // conservation property survives this layer with no slack.
                for (std::size_t i = 0; i < w_in.size(); ++i) {
                    m_w.data[i] += m * 0.5 * (v_in.data[i] + v_ref.data[i]);
                    m_v.data[i] += m * 0.5 * (w_in.data[i] + w_ref.data[i]);
                }
                break;
            }
        }
    }
    return contributions;
}

// ---------------------------------------------------------------------------
// Training gradients
// ---------------------------------------------------------------------------

void Gradients::init_like(const ComputeGraph& graph) {
    const auto& layers = graph.layers();
    weight.assign(layers.size(), Tensor());
    bias.assign(layers.size(), Tensor());
    kernel.assign(layers.size(), Tensor());
    conv_bias.assign(layers.size(), Tensor());
    for (std::size_t n = 0; n < layers.size(); ++n) {
        const Layer& l = layers[n];
        if (l.kind == LayerKind::Dense) {
            weight[n] = Tensor(l.weight.shape);
            bias[n] = Tensor(l.bias.shape);
        } else if (l.kind == LayerKind::Conv2D) {
            kernel[n] = Tensor(l.kernel.shape);
            conv_bias[n] = Tensor(l.conv_bias.shape);
        }
    }
}

void Gradients::scale(double factor) {
    for (Tensor& t : weight)
        for (double& v : t.data) v *= factor;
    for (Tensor& t : bias)
        for (double& v : t.data) v *= factor;
    for (Tensor& t : kernel)
        for (double& v : t.data) v *= factor;
    for (Tensor& t : conv_bias)
        for (double& v : t.data) v *= factor;
}

void accumulate_gradients(const ComputeGraph& graph, const ActivationTrace& trace, double upstream,
                          Gradients& grads) {
    const auto& layers = graph.layers();
    std::vector<Tensor> grad(layers.size());
    for (std::size_t n = 0; n < layers.size(); ++n) grad[n] = Tensor(trace.outputs[n].shape);
    grad[graph.output_node()].data[0] = upstream;

    for (std::size_t ni = layers.size(); ni-- > 0;) {
        const Layer& l = layers[ni];
        const Tensor& g_out = grad[ni];

        switch (l.kind) {
            case LayerKind::Input:
                break;
            case LayerKind::Dense: {
                const Tensor& x = trace.outputs[l.inputs[0]];
                Tensor& g_in = grad[l.inputs[0]];
                std::size_t out_f = l.weight.shape[0], in_f = l.weight.shape[1];
                std::size_t rows = x.size() / in_f;
                Tensor& dW = grads.weight[ni];
                Tensor& db = grads.bias[ni];
                for (std::size_t r = 0; r < rows; ++r) {
                    const double* go = g_out.data.data() + r * out_f;
                    const double* xr = x.data.data() + r * in_f;
                    double* gi = g_in.data.data() + r * in_f;
                    for (std::size_t o = 0; o < out_f; ++o) {
                        double g = go[o];
                        if (g == 0.0) continue;
                        db.data[o] += g;
                        const double* w = l.weight.data.data() + o * in_f;
                        double* dw = dW.data.data() + o * in_f;
                        for (std::size_t i = 0; i < in_f; ++i) {
                            dw[i] += g * xr[i];
                            gi[i] += g * w[i];
                        }
                    }
                }
                break;
            }
            case LayerKind::Activation: {
                const Tensor& x = trace.outputs[l.inputs[0]];
                Tensor& g_in = grad[l.inputs[0]];
                for (std::size_t i = 0; i < x.size(); ++i) {
                    g_in.data[i] += g_out.data[i] * act_grad(l.act, x.data[i]);
                }
                break;
            }
            case LayerKind::Conv2D: {
                const Tensor& x = trace.outputs[l.inputs[0]];
                Tensor& g_in = grad[l.inputs[0]];
                Rank3 d = as_rank3(x, static_cast<int>(ni), l.kind);
                std::size_t out_c = l.kernel.shape[0], in_c = l.kernel.shape[1];
                std::size_t kh = l.kernel.shape[2], kw = l.kernel.shape[3];
                std::size_t pad_t = (kh - 1) / 2, pad_l = (kw - 1) / 2;
                Tensor& dK = grads.kernel[ni];
                Tensor& db = grads.conv_bias[ni];
                for (std::size_t oc = 0; oc < out_c; ++oc) {
                    for (std::size_t i = 0; i < d.h; ++i) {
                        for (std::size_t j = 0; j < d.w; ++j) {
                            double g = g_out.at(oc, i, j);
                            if (g == 0.0) continue;
                            db.data[oc] += g;
                            for (std::size_t ic = 0; ic < in_c; ++ic) {
                                for (std::size_t u = 0; u < kh; ++u) {
                                    std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(i + u) -
                                                        static_cast<std::ptrdiff_t>(pad_t);
                                    if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(d.h)) continue;
                                    for (std::size_t v = 0; v < kw; ++v) {
                                        std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(j + v) -
                                                            static_cast<std::ptrdiff_t>(pad_l);
                                        if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(d.w)) continue;
                                        std::size_t xi = (ic * d.h + static_cast<std::size_t>(ii)) * d.w +
                                                         static_cast<std::size_t>(jj);
                                        dK.data[((oc * in_c + ic) * kh + u) * kw + v] += g * x.data[xi];
                                        g_in.data[xi] += g * l.kernel.data[((oc * in_c + ic) * kh + u) * kw + v];
                                    }
                                }
                            }
                        }
                    }
                }
                break;
            }
            case LayerKind::MaxPool2D: {
                const Tensor& x = trace.outputs[l.inputs[0]];
                Tensor& g_in = grad[l.inputs[0]];
                Rank3 d = as_rank3(x, static_cast<int>(ni), l.kind);
                for (std::size_t c = 0; c < d.c; ++c) {
                    for (std::size_t p = 0; p < l.pool_rows; ++p) {
                        auto [r0, r1] = pool_window(p, l.pool_rows, d.h);
                        for (std::size_t q = 0; q < l.pool_cols; ++q) {
                            auto [c0, c1] = pool_window(q, l.pool_cols, d.w);
                            if (r0 >= r1 || c0 >= c1) continue;
                            std::size_t sel = 0;
                            double best = -1e300;
                            for (std::size_t i = r0; i < r1; ++i) {
                                for (std::size_t j = c0; j < c1; ++j) {
                                    std::size_t flat = (c * d.h + i) * d.w + j;
                                    if (x.data[flat] > best) {
                                        best = x.data[flat];
                                        sel = flat;
                                    }
                                }
                            }
                            g_in.data[sel] += g_out.at(c, p, q);
                        }
                    }
                }
                break;
            }
            case LayerKind::KMaxPool: {
                const Tensor& x = trace.outputs[l.inputs[0]];
                Tensor& g_in = grad[l.inputs[0]];
                Rank3 d = as_rank3(x, static_cast<int>(ni), l.kind);
                for (std::size_t c = 0; c < d.c; ++c) {
                    for (std::size_t h = 0; h < d.h; ++h) {
                        std::size_t base = (c * d.h + h) * d.w;
                        auto pos = kmax_positions(x.data.data() + base, d.w, l.kmax);
                        for (std::size_t j = 0; j < pos.size(); ++j) {
                            g_in.data[base + pos[j]] += g_out.at(c, h, j);
                        }
                    }
                }
                break;
            }
            case LayerKind::Concat: {
                std::size_t total_last = trace.outputs[ni].shape.back();
                std::size_t rows = trace.outputs[ni].size() / total_last;
                std::size_t offset = 0;
                for (int in : l.inputs) {
                    Tensor& g_in = grad[in];
                    std::size_t last = trace.outputs[in].shape.back();
                    for (std::size_t rr = 0; rr < rows; ++rr) {
                        const double* src = g_out.data.data() + rr * total_last + offset;
                        double* dst = g_in.data.data() + rr * last;
                        for (std::size_t i = 0; i < last; ++i) dst[i] += src[i];
                    }
                    offset += last;
                }
                break;
            }
            case LayerKind::SoftmaxGate: {
                const Tensor& y = trace.outputs[ni];
                Tensor& g_in = grad[l.inputs[0]];
                double dot = 0.0;
                for (std::size_t i = 0; i < y.size(); ++i) dot += g_out.data[i] * y.data[i];
                for (std::size_t i = 0; i < y.size(); ++i) {
                    g_in.data[i] += y.data[i] * (g_out.data[i] - dot);
                }
                break;
            }
            case LayerKind::WeightedSum: {
                const Tensor& w = trace.outputs[l.inputs[0]];
                const Tensor& v = trace.outputs[l.inputs[1]];
                Tensor& g_w = grad[l.inputs[0]];
                Tensor& g_v = grad[l.inputs[1]];
                double g = g_out.data[0];
                for (std::size_t i = 0; i < w.size(); ++i) {
                    g_w.data[i] += g * v.data[i];
                    g_v.data[i] += g * w.data[i];
                }
                break;
            }
        }
    }
}

TrainStats train_pairwise(ComputeGraph& graph, const std::vector<TrainingPair>& pairs,
                          const TrainOptions& options) {
    if (pairs.empty()) throw config_error("train_pairwise: no training pairs");
    TrainStats stats;
    Rng rng(options.seed);

    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        // Seeded in-place shuffle; the only nondeterminism knob in training.
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            std::size_t j = i + rng.next_index(order.size() - i);
            std::swap(order[i], order[j]);
        }

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
            std::size_t end = std::min(order.size(), start + options.batch_size);
            Gradients grads;
            grads.init_like(graph);
            for (std::size_t b = start; b < end; ++b) {
                const TrainingPair& pair = pairs[order[b]];
                ActivationTrace pos_trace, neg_trace;
                double s_pos = forward(graph, pair.relevant, &pos_trace);
                double s_neg = forward(graph, pair.non_relevant, &neg_trace);
                double loss = std::max(0.0, options.margin - s_pos + s_neg);
                // max() can mask a NaN margin term, so the scores are checked too.
                if (!std::isfinite(loss) || !std::isfinite(s_pos) || !std::isfinite(s_neg)) {
                    std::ostringstream diag;
                    diag << "train_pairwise: non-finite loss at epoch " << epoch << ", pair "
                         << order[b] << " (s+ = " << s_pos << ", s- = " << s_neg << ")";
                    throw numeric_error(diag.str());
                }
                epoch_loss += loss;
                if (loss > 0.0) {
                    accumulate_gradients(graph, pos_trace, -1.0, grads);
                    accumulate_gradients(graph, neg_trace, 1.0, grads);
                }
            }
            grads.scale(options.learning_rate / static_cast<double>(end - start));
            auto& layers = graph.layers();
            for (std::size_t n = 0; n < layers.size(); ++n) {
                Layer& l = layers[n];
                if (l.kind == LayerKind::Dense) {
                    for (std::size_t i = 0; i < l.weight.size(); ++i) l.weight.data[i] -= grads.weight[n].data[i];
                    for (std::size_t i = 0; i < l.bias.size(); ++i) l.bias.data[i] -= grads.bias[n].data[i];
                } else if (l.kind == LayerKind::Conv2D) {
                    for (std::size_t i = 0; i < l.kernel.size(); ++i) l.kernel.data[i] -= grads.kernel[n].data[i];
                    for (std::size_t i = 0; i < l.conv_bias.size(); ++i) l.conv_bias.data[i] -= grads.conv_bias[n].data[i];
                }
            }
        }
        stats.epoch_loss.push_back(epoch_loss / static_cast<double>(pairs.size()));
    }
    return stats;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

nlohmann::json tensor_to_json(const Tensor& t) {
    return {{"shape", t.shape}, {"data", t.data}};
}

Tensor tensor_from_json(const nlohmann::json& j) {
    return Tensor(j.at("shape").get<std::vector<std::size_t>>(),
                  j.at("data").get<std::vector<double>>());
}

}  // namespace

std::string serialize_graph(const ComputeGraph& graph) {
    nlohmann::json j;
    j["format"] = "ranklens-graph-v1";
    j["output"] = graph.output_node();
    nlohmann::json nodes = nlohmann::json::array();
    for (const Layer& l : graph.layers()) {
        nlohmann::json n;
        n["kind"] = static_cast<int>(l.kind);
        n["inputs"] = l.inputs;
        switch (l.kind) {
            case LayerKind::Input: n["slot"] = l.slot; break;
            case LayerKind::Dense:
                n["weight"] = tensor_to_json(l.weight);
                n["bias"] = tensor_to_json(l.bias);
                n["flatten"] = l.flatten;
                break;
            case LayerKind::Activation: n["act"] = static_cast<int>(l.act); break;
            case LayerKind::Conv2D:
                n["kernel"] = tensor_to_json(l.kernel);
                n["conv_bias"] = tensor_to_json(l.conv_bias);
                break;
            case LayerKind::MaxPool2D:
                n["pool_rows"] = l.pool_rows;
                n["pool_cols"] = l.pool_cols;
                break;
            case LayerKind::KMaxPool: n["kmax"] = l.kmax; break;
            default: break;
        }
        nodes.push_back(std::move(n));
    }
    j["nodes"] = std::move(nodes);
    return j.dump(1);
}

ComputeGraph deserialize_graph(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
    if (j.is_discarded() || j.value("format", "") != "ranklens-graph-v1") {
        throw config_error("unrecognized graph checkpoint format");
    }
    ComputeGraph graph;
    Rng dummy(0);
    for (const auto& n : j.at("nodes")) {
        auto kind = static_cast<LayerKind>(n.at("kind").get<int>());
        std::vector<int> inputs = n.value("inputs", std::vector<int>{});
        int id = -1;
        switch (kind) {
            case LayerKind::Input: id = graph.add_input(n.at("slot").get<std::string>()); break;
            case LayerKind::Dense: {
                Tensor w = tensor_from_json(n.at("weight"));
                id = graph.add_dense(inputs.at(0), w.shape[1], w.shape[0], dummy,
                                     n.value("flatten", false));
                graph.layers()[id].weight = std::move(w);
                graph.layers()[id].bias = tensor_from_json(n.at("bias"));
                break;
            }
            case LayerKind::Activation:
                id = graph.add_activation(inputs.at(0), static_cast<ActKind>(n.at("act").get<int>()));
                break;
            case LayerKind::Conv2D: {
                Tensor k = tensor_from_json(n.at("kernel"));
                id = graph.add_conv2d(inputs.at(0), k.shape[1], k.shape[0], k.shape[2], k.shape[3], dummy);
                graph.layers()[id].kernel = std::move(k);
                graph.layers()[id].conv_bias = tensor_from_json(n.at("conv_bias"));
                break;
            }
            case LayerKind::MaxPool2D:
                id = graph.add_maxpool2d(inputs.at(0), n.at("pool_rows").get<std::size_t>(),
                                         n.at("pool_cols").get<std::size_t>());
                break;
            case LayerKind::KMaxPool:
                id = graph.add_kmax_pool(inputs.at(0), n.at("kmax").get<std::size_t>());
                break;
            case LayerKind::Concat: id = graph.add_concat(inputs); break;
            case LayerKind::SoftmaxGate: id = graph.add_softmax_gate(inputs.at(0)); break;
            case LayerKind::WeightedSum: id = graph.add_weighted_sum(inputs.at(0), inputs.at(1)); break;
        }
        (void)id;
    }
    graph.set_output(j.at("output").get<int>());
    return graph;
}

}  // namespace ranklens
