#include "attrib/model.hpp"

#include <cstring>

#include <json.hpp>

#include "attrib/io.hpp"
#include "attrib/kernels.hpp"

using json = nlohmann::ordered_json;

namespace attrib {

const char* layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::dense: return "dense";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::relu: return "relu";
        case LayerKind::softplus: return "softplus";
        case LayerKind::maxpool2d: return "maxpool2d";
        case LayerKind::avgpool2d: return "avgpool2d";
        case LayerKind::flatten: return "flatten";
        case LayerKind::softmax: return "softmax";
    }
    return "?";
}

LayerKind layer_kind_from_name(const std::string& name) {
    for (LayerKind k : {LayerKind::dense, LayerKind::conv2d, LayerKind::relu, LayerKind::softplus,
                        LayerKind::maxpool2d, LayerKind::avgpool2d, LayerKind::flatten,
                        LayerKind::softmax})
        if (name == layer_kind_name(k)) return k;
    throw config_error("unknown layer type: " + name);
}

const char* score_kind_name(ScoreKind kind) {
    return kind == ScoreKind::logit ? "logit" : "probability";
}

ScoreKind score_kind_from_name(const std::string& name) {
    if (name == "logit") return ScoreKind::logit;
    if (name == "probability") return ScoreKind::probability;
    throw config_error("unknown score kind: " + name);
}

LayerDesc LayerDesc::dense(std::string id, std::size_t in_f, std::size_t out_f,
                           std::string weight, std::string bias) {
    LayerDesc d;
    d.id = std::move(id);
    d.kind = LayerKind::dense;
    d.in_features = in_f;
    d.out_features = out_f;
    d.weight_name = std::move(weight);
    d.bias_name = std::move(bias);
    return d;
}

LayerDesc LayerDesc::conv2d(std::string id, std::size_t in_c, std::size_t out_c,
                            std::size_t kernel, std::size_t stride, std::size_t pad,
                            std::string weight, std::string bias) {
    LayerDesc d;
    d.id = std::move(id);
    d.kind = LayerKind::conv2d;
    d.in_channels = in_c;
    d.out_channels = out_c;
    d.kernel_h = d.kernel_w = kernel;
    d.stride_h = d.stride_w = stride;
    d.pad_h = d.pad_w = pad;
    d.weight_name = std::move(weight);
    d.bias_name = std::move(bias);
    return d;
}

LayerDesc LayerDesc::activation(std::string id, LayerKind kind) {
    LayerDesc d;
    d.id = std::move(id);
    d.kind = kind;
    return d;
}

LayerDesc LayerDesc::pool(std::string id, LayerKind kind, std::size_t kernel, std::size_t stride) {
    LayerDesc d;
    d.id = std::move(id);
    d.kind = kind;
    d.kernel_h = d.kernel_w = kernel;
    d.stride_h = d.stride_w = stride;
    return d;
}

LayerDesc LayerDesc::flatten(std::string id) { return activation(std::move(id), LayerKind::flatten); }
LayerDesc LayerDesc::softmax(std::string id) { return activation(std::move(id), LayerKind::softmax); }

namespace {

[[noreturn]] void layer_error(const LayerDesc& l, const std::string& what) {
    throw config_error("layer '" + l.id + "' (" + layer_kind_name(l.kind) + "): " + what);
}

std::vector<std::size_t> infer_output_shape(const LayerDesc& l, const std::vector<std::size_t>& in) {
    switch (l.kind) {
        case LayerKind::dense: {
            if (in.size() != 1 || in[0] != l.in_features)
                layer_error(l, "expects input shape [" + std::to_string(l.in_features) + "], got " +
                                   shape_to_string(in));
            return {l.out_features};
        }
        case LayerKind::conv2d: {
            if (in.size() != 3 || in[0] != l.in_channels)
                layer_error(l, "expects rank-3 input with " + std::to_string(l.in_channels) +
                                   " channels, got " + shape_to_string(in));
            if (in[1] + 2 * l.pad_h < l.kernel_h || in[2] + 2 * l.pad_w < l.kernel_w)
                layer_error(l, "kernel larger than padded input " + shape_to_string(in));
            kernels::Conv2dShape s{l.in_channels, in[1], in[2], l.out_channels,
                                   l.kernel_h,    l.kernel_w, l.stride_h, l.stride_w,
                                   l.pad_h,       l.pad_w};
            return {l.out_channels, s.out_h(), s.out_w()};
        }
        case LayerKind::maxpool2d:
        case LayerKind::avgpool2d: {
            if (in.size() != 3) layer_error(l, "expects rank-3 input, got " + shape_to_string(in));
            if (in[1] < l.kernel_h || in[2] < l.kernel_w)
                layer_error(l, "pool window larger than input " + shape_to_string(in));
            kernels::Pool2dShape s{in[0], in[1], in[2], l.kernel_h, l.kernel_w, l.stride_h, l.stride_w};
            return {in[0], s.out_h(), s.out_w()};
        }
        case LayerKind::flatten:
            return {shape_product(in)};
        case LayerKind::softmax:
            if (in.size() != 1) layer_error(l, "expects rank-1 input, got " + shape_to_string(in));
            return in;
        case LayerKind::relu:
        case LayerKind::softplus:
            return in;
    }
    layer_error(l, "unreachable");
}

}  // namespace

Model::Model(std::vector<std::size_t> input_shape, std::vector<LayerDesc> layers,
             std::map<std::string, Tensor> weights)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)), weights_(std::move(weights)) {
    if (layers_.empty()) throw config_error("model needs at least one layer");
    if (input_shape_.empty()) throw config_error("model input shape is empty");

    std::vector<std::size_t> cur = input_shape_;
    output_shapes_.reserve(layers_.size());
    for (const LayerDesc& l : layers_) {
        cur = infer_output_shape(l, cur);
        output_shapes_.push_back(cur);

        if (l.kind == LayerKind::dense || l.kind == LayerKind::conv2d) {
            if (l.weight_name.empty()) layer_error(l, "missing weight blob name");
            auto it = weights_.find(l.weight_name);
            if (it == weights_.end()) layer_error(l, "weight blob '" + l.weight_name + "' not provided");
            const std::vector<std::size_t> want =
                l.kind == LayerKind::dense
                    ? std::vector<std::size_t>{l.out_features, l.in_features}
                    : std::vector<std::size_t>{l.out_channels, l.in_channels, l.kernel_h, l.kernel_w};
            if (it->second.shape() != want)
                layer_error(l, "weight '" + l.weight_name + "' has shape " +
                                   shape_to_string(it->second.shape()) + ", expected " +
                                   shape_to_string(want));
            if (!l.bias_name.empty()) {
                auto bit = weights_.find(l.bias_name);
                if (bit == weights_.end()) layer_error(l, "bias blob '" + l.bias_name + "' not provided");
                const std::size_t want_b = l.kind == LayerKind::dense ? l.out_features : l.out_channels;
                if (bit->second.shape() != std::vector<std::size_t>{want_b})
                    layer_error(l, "bias '" + l.bias_name + "' has shape " +
                                       shape_to_string(bit->second.shape()) + ", expected [" +
                                       std::to_string(want_b) + "]");
            }
        }
    }
}

const Tensor& Model::weight(const std::string& name) const {
    auto it = weights_.find(name);
    if (it == weights_.end()) throw config_error("unknown weight blob: " + name);
    return it->second;
}

bool Model::ends_with_softmax() const { return layers_.back().kind == LayerKind::softmax; }

std::size_t Model::logit_size() const {
    const auto& shape =
        ends_with_softmax() && layers_.size() >= 2 ? output_shapes_[layers_.size() - 2] : output_shape();
    if (ends_with_softmax() && layers_.size() == 1) return shape_product(input_shape_);
    return shape_product(shape);
}

namespace {

json layer_to_json(const LayerDesc& l) {
    json j;
    j["id"] = l.id;
    j["type"] = layer_kind_name(l.kind);
    switch (l.kind) {
        case LayerKind::dense:
            j["in_features"] = l.in_features;
            j["out_features"] = l.out_features;
            break;
        case LayerKind::conv2d:
            j["in_channels"] = l.in_channels;
            j["out_channels"] = l.out_channels;
            j["kernel"] = {l.kernel_h, l.kernel_w};
            j["stride"] = {l.stride_h, l.stride_w};
            j["padding"] = {l.pad_h, l.pad_w};
            break;
        case LayerKind::maxpool2d:
        case LayerKind::avgpool2d:
            j["kernel"] = {l.kernel_h, l.kernel_w};
            j["stride"] = {l.stride_h, l.stride_w};
            break;
        default:
            break;
    }
    if (!l.weight_name.empty()) j["weights"] = l.weight_name;
    if (!l.bias_name.empty()) j["bias"] = l.bias_name;
    return j;
}

LayerDesc layer_from_json(const json& j) {
    LayerDesc l;
    l.id = j.at("id").get<std::string>();
    l.kind = layer_kind_from_name(j.at("type").get<std::string>());
    switch (l.kind) {
        case LayerKind::dense:
            l.in_features = j.at("in_features").get<std::size_t>();
            l.out_features = j.at("out_features").get<std::size_t>();
            break;
        case LayerKind::conv2d:
            l.in_channels = j.at("in_channels").get<std::size_t>();
            l.out_channels = j.at("out_channels").get<std::size_t>();
            l.kernel_h = j.at("kernel").at(0).get<std::size_t>();
            l.kernel_w = j.at("kernel").at(1).get<std::size_t>();
            l.stride_h = j.at("stride").at(0).get<std::size_t>();
            l.stride_w = j.at("stride").at(1).get<std::size_t>();
            l.pad_h = j.at("padding").at(0).get<std::size_t>();
            l.pad_w = j.at("padding").at(1).get<std::size_t>();
            break;
        case LayerKind::maxpool2d:
        case LayerKind::avgpool2d:
            l.kernel_h = j.at("kernel").at(0).get<std::size_t>();
            l.kernel_w = j.at("kernel").at(1).get<std::size_t>();
            l.stride_h = j.at("stride").at(0).get<std::size_t>();
            l.stride_w = j.at("stride").at(1).get<std::size_t>();
            break;
        default:
            break;
    }
    if (j.contains("weights")) l.weight_name = j["weights"].get<std::string>();
    if (j.contains("bias")) l.bias_name = j["bias"].get<std::string>();
    return l;
}

std::vector<std::uint8_t> blob_bytes(const Tensor& t) {
    std::vector<std::uint8_t> out(t.size() * 4);
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::uint32_t bits;
        const float v = t[i];
        std::memcpy(&bits, &v, 4);
        out[4 * i + 0] = static_cast<std::uint8_t>(bits & 0xff);
        out[4 * i + 1] = static_cast<std::uint8_t>((bits >> 8) & 0xff);
        out[4 * i + 2] = static_cast<std::uint8_t>((bits >> 16) & 0xff);
        out[4 * i + 3] = static_cast<std::uint8_t>((bits >> 24) & 0xff);
    }
    return out;
}

json manifest_json(const Model& m, const std::string& weights_file) {
    json j;
    j["schema"] = "attrib-model/1";
    j["input_shape"] = m.input_shape();
    j["layers"] = json::array();
    for (const LayerDesc& l : m.layers()) j["layers"].push_back(layer_to_json(l));
    json blobs = json::array();
    std::size_t offset = 0;
    for (const auto& [name, t] : m.weights()) {
        json b;
        b["name"] = name;
        b["shape"] = t.shape();
        b["offset"] = offset;
        b["size"] = t.size() * 4;
        blobs.push_back(b);
        offset += t.size() * 4;
    }
    j["weights"] = {{"file", weights_file}, {"blobs", blobs}};
    return j;
}

}  // namespace

std::uint64_t Model::content_hash() const {
    const std::string manifest = manifest_json(*this, "").dump();
    std::uint64_t h = fnv1a64(manifest.data(), manifest.size());
    for (const auto& [name, t] : weights_) {
        const auto bytes = blob_bytes(t);
        h = fnv1a64(bytes.data(), bytes.size(), h);
    }
    return h;
}

void Model::save(const std::filesystem::path& manifest_path) const {
    const std::string weights_file = manifest_path.stem().string() + ".bin";
    std::vector<std::uint8_t> payload;
    for (const auto& [name, t] : weights_) {
        const auto bytes = blob_bytes(t);
        payload.insert(payload.end(), bytes.begin(), bytes.end());
    }
    write_file_atomic(manifest_path.parent_path() / weights_file, payload);
    write_file_atomic(manifest_path, manifest_json(*this, weights_file).dump(2) + "\n");
}

Model Model::load(const std::filesystem::path& manifest_path) {
    json j;
    try {
        j = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
        throw io_error("cannot parse model manifest " + manifest_path.string() + ": " + e.what());
    }
    try {
        if (j.value("schema", "") != "attrib-model/1")
            throw io_error("unsupported model schema in " + manifest_path.string());
        std::vector<std::size_t> input_shape = j.at("input_shape").get<std::vector<std::size_t>>();
        std::vector<LayerDesc> layers;
        for (const json& lj : j.at("layers")) layers.push_back(layer_from_json(lj));

        const json& w = j.at("weights");
        const auto bin_path = manifest_path.parent_path() / w.at("file").get<std::string>();
        const auto payload = read_file_bytes(bin_path);
        std::map<std::string, Tensor> weights;
        for (const json& bj : w.at("blobs")) {
            const std::string name = bj.at("name").get<std::string>();
            const auto shape = bj.at("shape").get<std::vector<std::size_t>>();
            const std::size_t offset = bj.at("offset").get<std::size_t>();
            const std::size_t size = bj.at("size").get<std::size_t>();
            if (size != shape_product(shape) * 4)
                throw io_error("blob '" + name + "' size/shape mismatch in " + manifest_path.string());
            if (offset + size > payload.size())
                throw io_error("blob '" + name + "' extends past weight file " + bin_path.string());
            std::vector<float> data(shape_product(shape));
            for (std::size_t i = 0; i < data.size(); ++i) {
                std::uint32_t bits = static_cast<std::uint32_t>(payload[offset + 4 * i]) |
                                     (static_cast<std::uint32_t>(payload[offset + 4 * i + 1]) << 8) |
                                     (static_cast<std::uint32_t>(payload[offset + 4 * i + 2]) << 16) |
                                     (static_cast<std::uint32_t>(payload[offset + 4 * i + 3]) << 24);
                std::memcpy(&data[i], &bits, 4);
            }
            weights.emplace(name, Tensor(shape, std::move(data)));
        }
        return Model(std::move(input_shape), std::move(layers), std::move(weights));
    } catch (const json::exception& e) {
        throw io_error("malformed model manifest " + manifest_path.string() + ": " + e.what());
    }
}

}  // namespace attrib
