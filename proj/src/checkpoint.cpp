#include "flowmotion/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace flowmotion {

namespace {

constexpr char kMagic[4] = {'F', 'M', 'C', 'P'};
constexpr uint32_t kVersion = 1;

void put_u32(std::vector<uint8_t>& out, uint32_t x) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((x >> (8 * i)) & 0xff));
}

void put_u64(std::vector<uint8_t>& out, uint64_t x) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((x >> (8 * i)) & 0xff));
}

struct Reader {
    const std::vector<uint8_t>& bytes;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > bytes.size()) throw LengthError("checkpoint truncated");
    }
    uint32_t u32() {
        need(4);
        uint32_t x = 0;
        for (int i = 0; i < 4; ++i) x |= static_cast<uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        return x;
    }
    uint64_t u64() {
        need(8);
        uint64_t x = 0;
        for (int i = 0; i < 8; ++i) x |= static_cast<uint64_t>(bytes[pos + i]) << (8 * i);
        pos += 8;
        return x;
    }
    std::string str(size_t n) {
        need(n);
        std::string s(bytes.begin() + pos, bytes.begin() + pos + n);
        pos += n;
        return s;
    }
};

void put_tensor(std::vector<uint8_t>& out, const std::string& name, const Tensor& t) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u32(out, static_cast<uint32_t>(d));
    for (double value : t.v) {
        const uint32_t bits = std::bit_cast<uint32_t>(static_cast<float>(value));
        put_u32(out, bits);
    }
}

std::pair<std::string, Tensor> get_tensor(Reader& r) {
    const uint32_t name_len = r.u32();
    std::string name = r.str(name_len);
    const uint32_t ndim = r.u32();
    if (ndim == 0 || ndim > 8) throw FormatError("checkpoint tensor has bad rank");
    std::vector<int> shape(ndim);
    for (uint32_t i = 0; i < ndim; ++i) {
        const uint32_t d = r.u32();
        if (d == 0 || d > (1u << 24)) throw FormatError("checkpoint tensor has bad dimension");
        shape[i] = static_cast<int>(d);
    }
    Tensor t(shape);
    for (double& value : t.v) {
        value = static_cast<double>(std::bit_cast<float>(r.u32()));
    }
    return {std::move(name), std::move(t)};
}

}  // namespace

std::string net_config_json(const NetConfig& cfg) {
    nlohmann::ordered_json j;
    j["input_channels"] = cfg.input_channels;
    j["input_size"] = cfg.input_size;
    j["stem_channels"] = cfg.stem_channels;
    j["stage_widths"] = cfg.stage_widths;
    j["blocks_per_stage"] = cfg.blocks_per_stage;
    j["output_dim"] = cfg.output_dim;
    return j.dump();
}

NetConfig net_config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad net config json: ") + e.what());
    }
    NetConfig cfg;
    cfg.input_channels = j.value("input_channels", cfg.input_channels);
    cfg.input_size = j.value("input_size", cfg.input_size);
    cfg.stem_channels = j.value("stem_channels", cfg.stem_channels);
    if (j.contains("stage_widths")) cfg.stage_widths = j["stage_widths"].get<std::vector<int>>();
    if (j.contains("blocks_per_stage")) {
        cfg.blocks_per_stage = j["blocks_per_stage"].get<std::vector<int>>();
    }
    cfg.output_dim = j.value("output_dim", cfg.output_dim);
    cfg.validate();
    return cfg;
}

std::vector<uint8_t> serialize_checkpoint(Net& net, const std::map<std::string, Tensor>* velocities) {
    const std::string header = net_config_json(net.config());

    std::vector<uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32(out, kVersion);
    put_u64(out, header.size());
    out.insert(out.end(), header.begin(), header.end());

    uint32_t count = 0;
    for (const ParamRef& p : net.params()) (void)p, ++count;
    for (const BufferRef& b : net.buffers()) (void)b, ++count;
    if (velocities) count += static_cast<uint32_t>(velocities->size());
    put_u32(out, count);

    for (const ParamRef& p : net.params()) put_tensor(out, p.name, *p.value);
    for (const BufferRef& b : net.buffers()) put_tensor(out, b.name, *b.value);
    if (velocities) {
        for (const auto& [name, tensor] : *velocities) {
            put_tensor(out, "opt.momentum." + name, tensor);
        }
    }
    return out;
}

LoadedCheckpoint deserialize_checkpoint(const std::vector<uint8_t>& bytes) {
    Reader r{bytes};
    r.need(4);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError("not a checkpoint file: bad magic");
    }
    r.pos = 4;
    const uint32_t version = r.u32();
    if (version != kVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    }
    const uint64_t json_len = r.u64();
    if (json_len > (1u << 20)) throw FormatError("checkpoint header too large");
    const std::string header = r.str(json_len);
    NetConfig cfg = net_config_from_json(header);

    LoadedCheckpoint loaded{cfg, Net(cfg), {}};
    std::map<std::string, Tensor> tensors;
    const uint32_t count = r.u32();
    for (uint32_t i = 0; i < count; ++i) {
        auto [name, tensor] = get_tensor(r);
        tensors.emplace(std::move(name), std::move(tensor));
    }
    if (r.pos != bytes.size()) {
        throw LengthError("checkpoint has trailing bytes");
    }

    auto take = [&tensors](const std::string& name, Tensor& dst) {
        auto it = tensors.find(name);
        if (it == tensors.end()) {
            throw FormatError("checkpoint missing tensor '" + name + "'");
        }
        if (!it->second.same_shape(dst)) {
            throw ShapeError("checkpoint tensor '" + name + "' has shape " +
                             it->second.shape_str() + ", expected " + dst.shape_str());
        }
        dst = std::move(it->second);
        tensors.erase(it);
    };

    for (const ParamRef& p : loaded.net.params()) take(p.name, *p.value);
    for (const BufferRef& b : loaded.net.buffers()) take(b.name, *b.value);
    for (auto& [name, tensor] : tensors) {
        constexpr std::string_view kOptPrefix = "opt.momentum.";
        if (name.rfind(kOptPrefix, 0) == 0) {
            loaded.velocities.emplace(name.substr(kOptPrefix.size()), std::move(tensor));
        } else {
            throw FormatError("checkpoint has unexpected tensor '" + name + "'");
        }
    }
    return loaded;
}

void save_checkpoint(const std::string& path, Net& net,
                     const std::map<std::string, Tensor>* velocities) {
    const std::vector<uint8_t> bytes = serialize_checkpoint(net, velocities);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

}  // namespace flowmotion
