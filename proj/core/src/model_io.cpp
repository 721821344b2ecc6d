#include "nirsgaf/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nirsgaf/errors.hpp"

namespace nirsgaf::nn {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'G', 'N', 'N', '1'};

void put_u64(std::ostream& out, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double d) { put_u64(out, std::bit_cast<uint64_t>(d)); }

uint64_t get_u64(std::istream& in, const std::string& path) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8))
        throw CorruptModel(path + ": truncated model file");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in, const std::string& path) {
    return std::bit_cast<double>(get_u64(in, path));
}

struct NamedVector {
    std::string name;
    std::vector<double>* value;
};

std::vector<NamedVector> all_arrays(Network& net) {
    std::vector<NamedVector> arrays;
    for (const auto& pv : net.params()) arrays.push_back({pv.name, pv.value});
    for (const auto& sv : net.state()) arrays.push_back({sv.name, sv.value});
    return arrays;
}

}  // namespace

void save_model(const std::string& path, Network& net) {
    const auto arrays = all_arrays(net);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(kMagic, 4);
    put_u64(out, arrays.size());
    for (const auto& a : arrays) {
        put_u64(out, a.name.size());
        out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
        put_u64(out, a.value->size());
        for (double v : *a.value) put_f64(out, v);
    }
    if (!out) throw IoError("write failed: " + path);

    json manifest;
    manifest["format"] = "GNN1";
    manifest["network"] = json::parse(net.spec().to_json_text());
    manifest["arrays"] = json::array();
    for (const auto& a : arrays)
        manifest["arrays"].push_back({{"name", a.name}, {"length", a.value->size()}});
    std::ofstream mout(path + ".json");
    if (!mout) throw IoError("cannot write " + path + ".json");
    mout << manifest.dump(2) << "\n";
    if (!mout) throw IoError("write failed: " + path + ".json");
}

Network load_model(const std::string& path) {
    json manifest;
    {
        std::ifstream min(path + ".json");
        if (!min) throw CorruptModel(path + ".json: missing model manifest");
        try {
            min >> manifest;
        } catch (const json::exception& e) {
            throw CorruptModel(path + ".json: " + e.what());
        }
    }
    if (manifest.value("format", "") != "GNN1")
        throw CorruptModel(path + ".json: unknown format tag");
    NetworkSpec spec;
    try {
        spec = NetworkSpec::from_json_text(manifest.at("network").dump());
    } catch (const json::exception& e) {
        throw CorruptModel(path + ".json: " + e.what());
    }
    Network net(spec, 0);

    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorruptModel(path + ": cannot open model file");
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw CorruptModel(path + ": bad magic bytes");

    auto arrays = all_arrays(net);
    const uint64_t count = get_u64(in, path);
    if (count != arrays.size())
        throw CorruptModel(path + ": file has " + std::to_string(count) + " arrays, network has " +
                           std::to_string(arrays.size()));
    for (auto& a : arrays) {
        const uint64_t name_len = get_u64(in, path);
        std::string name(name_len, '\0');
        if (!in.read(name.data(), static_cast<std::streamsize>(name_len)))
            throw CorruptModel(path + ": truncated model file");
        if (name != a.name)
            throw CorruptModel(path + ": array '" + name + "' where '" + a.name + "' expected");
        const uint64_t len = get_u64(in, path);
        if (len != a.value->size())
            throw CorruptModel(path + ": array '" + name + "' has " + std::to_string(len) +
                               " values, expected " + std::to_string(a.value->size()));
        for (auto& v : *a.value) v = get_f64(in, path);
    }
    char extra;
    if (in.read(&extra, 1)) throw CorruptModel(path + ": trailing bytes after last array");
    return net;
}

}  // namespace nirsgaf::nn
