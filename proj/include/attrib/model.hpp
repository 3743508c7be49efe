#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "attrib/tensor.hpp"

namespace attrib {

enum class LayerKind { dense, conv2d, relu, softplus, maxpool2d, avgpool2d, flatten, softmax };

const char* layer_kind_name(LayerKind kind);
LayerKind layer_kind_from_name(const std::string& name);

/// Declarative layer description. Only the fields relevant to `kind` are
/// meaningful; shape checking happens in the Model constructor.
struct LayerDesc {
    std::string id;
    LayerKind kind = LayerKind::relu;

    // dense
    std::size_t in_features = 0, out_features = 0;
    // conv2d
    std::size_t in_channels = 0, out_channels = 0;
    // conv2d + pools
    std::size_t kernel_h = 0, kernel_w = 0;
    std::size_t stride_h = 1, stride_w = 1;
    std::size_t pad_h = 0, pad_w = 0;
    // dense + conv2d weight blob names ("" means no bias)
    std::string weight_name, bias_name;

    static LayerDesc dense(std::string id, std::size_t in_f, std::size_t out_f,
                           std::string weight, std::string bias = "");
    static LayerDesc conv2d(std::string id, std::size_t in_c, std::size_t out_c,
                            std::size_t kernel, std::size_t stride, std::size_t pad,
                            std::string weight, std::string bias = "");
    static LayerDesc activation(std::string id, LayerKind kind);
    static LayerDesc pool(std::string id, LayerKind kind, std::size_t kernel, std::size_t stride);
    static LayerDesc flatten(std::string id);
    static LayerDesc softmax(std::string id);
};

/// Ordered layer stack plus weights; evaluable and differentiable with
/// respect to its input. Immutable after construction, safe to share across
/// threads.
class Model {
public:
    Model(std::vector<std::size_t> input_shape, std::vector<LayerDesc> layers,
          std::map<std::string, Tensor> weights);

    const std::vector<std::size_t>& input_shape() const { return input_shape_; }
    const std::vector<LayerDesc>& layers() const { return layers_; }
    const std::map<std::string, Tensor>& weights() const { return weights_; }
    const Tensor& weight(const std::string& name) const;

    /// Shape of the activation produced by layer `i` (validated at build time).
    const std::vector<std::size_t>& layer_output_shape(std::size_t i) const { return output_shapes_[i]; }
    const std::vector<std::size_t>& output_shape() const { return output_shapes_.back(); }
    std::size_t output_size() const { return shape_product(output_shape()); }

    bool ends_with_softmax() const;
    /// Dimension of the vector the score target indexes into (logits).
    std::size_t logit_size() const;

    /// FNV-1a over the canonical manifest plus weight bytes.
    std::uint64_t content_hash() const;

    /// JSON manifest + sidecar binary of little-endian f32 blobs. The blob
    /// table records byte offsets in manifest order.
    void save(const std::filesystem::path& manifest_path) const;
    static Model load(const std::filesystem::path& manifest_path);

private:
    std::vector<std::size_t> input_shape_;
    std::vector<LayerDesc> layers_;
    std::map<std::string, Tensor> weights_;
    std::vector<std::vector<std::size_t>> output_shapes_;
};

enum class ScoreKind { logit, probability };

/// Selects the scalar the attribution methods explain.
struct ScoreTarget {
    std::size_t class_index = 0;
    ScoreKind kind = ScoreKind::logit;
};

const char* score_kind_name(ScoreKind kind);
ScoreKind score_kind_from_name(const std::string& name);

}  // namespace attrib
