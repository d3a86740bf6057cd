// SPDX-License-Identifier: Apache-2.0
#include "upright/binary_io.hpp"
#include "upright/nn/params.hpp"

namespace upright::nn {

void save_checkpoint(const ParamStore& store, const std::string& config_text, const std::filesystem::path& path) {
    binio::Writer w;
    w.bytes("UCKP", 4);
    w.u32(1);
    w.str(config_text);
    w.u32(static_cast<std::uint32_t>(store.params().size()));
    for (const auto& p : store.params()) {
        w.str(p.name);
        w.u8(static_cast<std::uint8_t>(p.tensor.ndim()));
        for (int d : p.tensor.shape()) w.u32(static_cast<std::uint32_t>(d));
        w.u8(p.frozen ? 1 : 0);
        w.f32s(p.tensor.values());
    }
    binio::write_file(path.string(), w.buffer());
}

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    try {
        return binio::read_file(path.string());
    } catch (const std::exception& e) {
        throw CheckpointError(e.what());
    }
}

std::string read_header(binio::Reader& r, const std::filesystem::path& path) {
    char magic[4];
    std::uint32_t version = 0;
    std::string config;
    if (!r.bytes(magic, 4) || std::string(magic, 4) != "UCKP") throw CheckpointError(path.string() + ": bad magic");
    if (!r.u32(version) || version != 1) throw CheckpointError(path.string() + ": unsupported checkpoint version");
    if (!r.str(config)) throw CheckpointError(path.string() + ": truncated header");
    return config;
}

}  // namespace

std::string read_checkpoint_config(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    binio::Reader r(bytes);
    return read_header(r, path);
}

std::string load_checkpoint(ParamStore& store, const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    binio::Reader r(bytes);
    const std::string config = read_header(r, path);
    std::uint32_t count = 0;
    if (!r.u32(count)) throw CheckpointError(path.string() + ": truncated header");
    if (count != store.params().size()) {
        throw CheckpointError(path.string() + ": holds " + std::to_string(count) + " parameters, model expects " +
                              std::to_string(store.params().size()));
    }
    for (std::uint32_t k = 0; k < count; ++k) {
        std::string name;
        std::uint8_t rank = 0, frozen = 0;
        if (!r.str(name) || !r.u8(rank)) throw CheckpointError(path.string() + ": truncated parameter record");
        Shape shape(rank);
        for (auto& d : shape) {
            std::uint32_t v = 0;
            if (!r.u32(v)) throw CheckpointError(path.string() + ": truncated shape");
            d = static_cast<int>(v);
        }
        if (!r.u8(frozen)) throw CheckpointError(path.string() + ": truncated parameter record");
        Parameter* p = store.find(name);
        if (!p) throw CheckpointError(path.string() + ": unknown parameter " + name);
        if (p->tensor.shape() != shape) {
            throw CheckpointError(path.string() + ": parameter " + name + " has shape " + shape_str(shape) +
                                  ", model expects " + shape_str(p->tensor.shape()));
        }
        if (!r.f32s(p->tensor.values())) throw CheckpointError(path.string() + ": truncated payload for " + name);
    }
    if (r.remaining() != 0) throw CheckpointError(path.string() + ": trailing bytes");
    return config;
}

}  // namespace upright::nn
