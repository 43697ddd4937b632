#include "agentcritic/checkpoint.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "agentcritic/error.hpp"
#include "json.hpp"

namespace agentcritic {

namespace {

void append_double(std::string& out, double x) {
    if (!std::isfinite(x)) throw NumericError("cannot checkpoint a non-finite parameter");
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    out.append(buf, end);
}

void append_string(std::string& out, const std::string& s) { out += nlohmann::json(s).dump(); }

} // namespace

std::string write_checkpoint(const Checkpoint& ckpt) {
    const CheckpointHeader& h = ckpt.header;
    std::string out;
    out.reserve(ckpt.params.element_count() * 22 + 1024);
    out += "{\"format_version\":" + std::to_string(h.format_version);
    out += ",\"architecture_id\":";
    append_string(out, h.architecture_id);
    out += ",\"vocab_size\":" + std::to_string(h.dims.vocab_size);
    out += ",\"embed_dim\":" + std::to_string(h.dims.embed_dim);
    out += ",\"hidden_dim\":" + std::to_string(h.dims.hidden_dim);
    out += ",\"seed\":" + std::to_string(h.seed);
    out += ",\"params\":{";
    bool first = true;
    for (const auto& [name, t] : ckpt.params) {
        if (!first) out += ',';
        first = false;
        out += '\n';
        append_string(out, name);
        out += ":{\"shape\":[";
        for (std::size_t i = 0; i < t.shape().size(); ++i) {
            if (i) out += ',';
            out += std::to_string(t.shape()[i]);
        }
        out += "],\"data\":[";
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (i) out += ',';
            append_double(out, t[i]);
        }
        out += "]}";
    }
    out += "\n}}\n";
    return out;
}

Checkpoint read_checkpoint(std::string_view text) {
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(std::string("malformed checkpoint: ") + e.what());
    }
    Checkpoint ck;
    try {
        ck.header.format_version = doc.at("format_version").get<int>();
        if (ck.header.format_version != kCheckpointFormatVersion)
            throw IoError("unsupported checkpoint format_version " + std::to_string(ck.header.format_version));
        ck.header.architecture_id = doc.at("architecture_id").get<std::string>();
        ck.header.dims.vocab_size = doc.at("vocab_size").get<std::size_t>();
        ck.header.dims.embed_dim = doc.at("embed_dim").get<std::size_t>();
        ck.header.dims.hidden_dim = doc.at("hidden_dim").get<std::size_t>();
        ck.header.seed = doc.at("seed").get<std::uint64_t>();
        for (const auto& [name, entry] : doc.at("params").items()) {
            Tensor t(entry.at("shape").get<std::vector<std::size_t>>());
            const auto& data = entry.at("data");
            if (!data.is_array() || data.size() != t.size())
                throw IoError("checkpoint parameter '" + name + "' has " + std::to_string(data.size()) +
                              " values, shape needs " + std::to_string(t.size()));
            for (std::size_t i = 0; i < t.size(); ++i) t[i] = data[i].get<double>();
            ck.params.add(name, std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed checkpoint: ") + e.what());
    }
    return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const std::string text = write_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return read_checkpoint(buf.str());
}

} // namespace agentcritic
