#include "ecnp/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "ecnp/error.hpp"

namespace ecnp {
namespace {

constexpr char kMagic[8] = {'E', 'C', 'N', 'P', 'C', 'K', 'P', 'T'};
constexpr uint32_t kFormatVersion = 1;

uint64_t fnv1a(const std::string& bytes) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(out, bits);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class Reader {
public:
    Reader(std::string bytes, std::string path)
        : bytes_(std::move(bytes)), path_(std::move(path)) {}

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }

    double f64() {
        const uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }

    std::string str(size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    void expect_magic() {
        need(sizeof(kMagic));
        if (std::memcmp(bytes_.data() + pos_, kMagic, sizeof(kMagic)) != 0)
            raise(Error::Kind::CorruptFile, path_ + ": not a checkpoint (bad magic)");
        pos_ += sizeof(kMagic);
    }

    size_t pos() const { return pos_; }
    size_t size() const { return bytes_.size(); }
    const std::string& bytes() const { return bytes_; }

private:
    void need(size_t n) {
        if (pos_ + n > bytes_.size())
            raise(Error::Kind::CorruptFile, path_ + ": checkpoint truncated");
    }

    std::string bytes_;
    std::string path_;
    size_t pos_ = 0;
};

std::map<std::string, std::string> parse_kv(const std::string& text, const std::string& path) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            raise(Error::Kind::CorruptFile, path + ": malformed config line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

const std::string& kv_get(const std::map<std::string, std::string>& kv, const std::string& key,
                          const std::string& path) {
    auto it = kv.find(key);
    if (it == kv.end())
        raise(Error::Kind::CorruptFile, path + ": checkpoint config missing key '" + key + "'");
    return it->second;
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainState& state) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, kFormatVersion);

    const ModelConfig& mc = state.model.config;
    std::ostringstream cfg;
    cfg << "x_dim=" << mc.x_dim << '\n'
        << "y_dim=" << mc.y_dim << '\n'
        << "repr_dim=" << mc.repr_dim << '\n'
        << "hidden_dim=" << mc.hidden_dim << '\n'
        << "encoder_layers=" << mc.encoder_layers << '\n'
        << "decoder_layers=" << mc.decoder_layers << '\n'
        << "head=" << head_name(mc.head) << '\n'
        << "evid_head_hidden=" << mc.evid_head_hidden << '\n'
        << "clamp_ev=" << fmt_double(mc.clamp_ev) << '\n'
        << "beta_offset=" << fmt_double(mc.beta_offset) << '\n'
        << "sigma_floor=" << fmt_double(mc.sigma_floor) << '\n'
        << "adam_lr=" << fmt_double(state.adam.config.lr) << '\n'
        << "adam_beta1=" << fmt_double(state.adam.config.beta1) << '\n'
        << "adam_beta2=" << fmt_double(state.adam.config.beta2) << '\n'
        << "adam_eps=" << fmt_double(state.adam.config.eps) << '\n'
        << "adam_t=" << state.adam.t << '\n'
        << "step=" << state.step << '\n'
        << "task_cursor=" << state.task_cursor << '\n'
        << "seed=" << state.seed << '\n';
    const std::string cfg_text = cfg.str();
    put_u64(out, cfg_text.size());
    out += cfg_text;

    const auto named = state.model.named_params();
    const size_t n_params = named.size();
    if (state.adam.m.size() != n_params || state.adam.v.size() != n_params)
        raise(Error::Kind::InvalidParams,
              "checkpoint state has no optimizer moments; reset the Adam state first");
    put_u32(out, static_cast<uint32_t>(n_params * 3));  // param + adam m + adam v
    auto put_array = [&out](const std::string& name, const Array& a) {
        put_u32(out, static_cast<uint32_t>(name.size()));
        out += name;
        put_u32(out, static_cast<uint32_t>(a.rank()));
        for (int64_t d : a.shape()) put_u64(out, static_cast<uint64_t>(d));
        for (int64_t i = 0; i < a.size(); ++i) put_f64(out, a[i]);
    };
    for (const auto& [name, arr] : named) put_array(name, *arr);
    for (size_t i = 0; i < n_params; ++i) put_array("adam.m." + named[i].first, state.adam.m[i]);
    for (size_t i = 0; i < n_params; ++i) put_array("adam.v." + named[i].first, state.adam.v[i]);

    put_u64(out, fnv1a(out));

    std::ofstream file(path, std::ios::binary);
    if (!file) raise(Error::Kind::IoError, "cannot create checkpoint: " + path);
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) raise(Error::Kind::IoError, "failed writing checkpoint: " + path);
}

TrainState load_checkpoint(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) raise(Error::Kind::IoError, "cannot open checkpoint: " + path);
    std::ostringstream buf;
    buf << file.rdbuf();
    Reader in(buf.str(), path);

    if (in.size() < 8)
        raise(Error::Kind::CorruptFile, path + ": checkpoint truncated");
    {
        // Verify the trailing checksum before trusting any field.
        const std::string& all = in.bytes();
        const std::string body = all.substr(0, all.size() - 8);
        uint64_t stored = 0;
        for (int i = 0; i < 8; ++i)
            stored |= static_cast<uint64_t>(
                          static_cast<unsigned char>(all[all.size() - 8 + static_cast<size_t>(i)]))
                      << (8 * i);
        if (fnv1a(body) != stored)
            raise(Error::Kind::CorruptFile, path + ": checkpoint checksum mismatch");
    }

    in.expect_magic();
    const uint32_t version = in.u32();
    if (version != kFormatVersion)
        raise(Error::Kind::VersionMismatch,
              path + ": checkpoint format version " + std::to_string(version) + ", expected " +
                  std::to_string(kFormatVersion));

    const uint64_t cfg_len = in.u64();
    const auto kv = parse_kv(in.str(cfg_len), path);

    ModelConfig mc;
    mc.x_dim = std::stoll(kv_get(kv, "x_dim", path));
    mc.y_dim = std::stoll(kv_get(kv, "y_dim", path));
    mc.repr_dim = std::stoll(kv_get(kv, "repr_dim", path));
    mc.hidden_dim = std::stoll(kv_get(kv, "hidden_dim", path));
    mc.encoder_layers = std::stoll(kv_get(kv, "encoder_layers", path));
    mc.decoder_layers = std::stoll(kv_get(kv, "decoder_layers", path));
    mc.head = head_from_name(kv_get(kv, "head", path));
    mc.evid_head_hidden = std::stoll(kv_get(kv, "evid_head_hidden", path));
    mc.clamp_ev = std::stod(kv_get(kv, "clamp_ev", path));
    mc.beta_offset = std::stod(kv_get(kv, "beta_offset", path));
    mc.sigma_floor = std::stod(kv_get(kv, "sigma_floor", path));

    TrainState state;
    state.model = ModelParams::create(mc, /*seed=*/0);
    state.adam.config.lr = std::stod(kv_get(kv, "adam_lr", path));
    state.adam.config.beta1 = std::stod(kv_get(kv, "adam_beta1", path));
    state.adam.config.beta2 = std::stod(kv_get(kv, "adam_beta2", path));
    state.adam.config.eps = std::stod(kv_get(kv, "adam_eps", path));
    state.adam.reset(state.model.all_params());
    state.adam.t = std::stoll(kv_get(kv, "adam_t", path));
    state.step = std::stoll(kv_get(kv, "step", path));
    state.task_cursor = std::stoull(kv_get(kv, "task_cursor", path));
    state.seed = std::stoull(kv_get(kv, "seed", path));

    const auto named = state.model.named_params();
    std::map<std::string, Array*> slots;
    for (const auto& [name, arr] : named) slots[name] = arr;
    for (size_t i = 0; i < named.size(); ++i) {
        slots["adam.m." + named[i].first] = &state.adam.m[i];
        slots["adam.v." + named[i].first] = &state.adam.v[i];
    }

    const uint32_t n_arrays = in.u32();
    if (n_arrays != slots.size())
        raise(Error::Kind::CorruptFile,
              path + ": checkpoint holds " + std::to_string(n_arrays) + " arrays, expected " +
                  std::to_string(slots.size()));
    for (uint32_t i = 0; i < n_arrays; ++i) {
        const uint32_t name_len = in.u32();
        const std::string name = in.str(name_len);
        auto it = slots.find(name);
        if (it == slots.end())
            raise(Error::Kind::CorruptFile, path + ": unexpected array '" + name + "'");
        Array& dst = *it->second;
        const uint32_t rank = in.u32();
        if (static_cast<int64_t>(rank) != dst.rank())
            raise(Error::Kind::CorruptFile, path + ": rank mismatch for '" + name + "'");
        for (uint32_t d = 0; d < rank; ++d) {
            if (static_cast<int64_t>(in.u64()) != dst.dim(d))
                raise(Error::Kind::CorruptFile, path + ": shape mismatch for '" + name + "'");
        }
        for (int64_t j = 0; j < dst.size(); ++j) dst[j] = in.f64();
    }
    if (in.pos() + 8 != in.size())
        raise(Error::Kind::CorruptFile, path + ": trailing bytes after checkpoint payload");
    return state;
}

}  // namespace ecnp
