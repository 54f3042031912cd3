#include "adbn/model_io.hpp"

#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "adbn/crc32c.hpp"
#include "adbn/errors.hpp"

namespace adbn {
namespace {

void put_u32(std::string& buf, std::uint32_t value) {
    buf.push_back(static_cast<char>(value & 0xFF));
    buf.push_back(static_cast<char>((value >> 8) & 0xFF));
    buf.push_back(static_cast<char>((value >> 16) & 0xFF));
    buf.push_back(static_cast<char>((value >> 24) & 0xFF));
}

void put_f64(std::string& buf, double value) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(value));
    std::memcpy(&bits, &value, sizeof(bits));
    for (int shift = 0; shift < 64; shift += 8)
        buf.push_back(static_cast<char>((bits >> shift) & 0xFF));
}

class Parser {
  public:
    Parser(const std::string& data, std::size_t end) : data_(data), end_(end) {}

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t value = 0;
        for (int shift = 0; shift < 32; shift += 8)
            value |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_++])) << shift;
        return value;
    }

    double f64(const char* what) {
        need(8, what);
        std::uint64_t bits = 0;
        for (int shift = 0; shift < 64; shift += 8)
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_++])) << shift;
        double value;
        std::memcpy(&value, &bits, sizeof(value));
        return value;
    }

    std::string bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    std::size_t remaining() const { return end_ - pos_; }

  private:
    void need(std::size_t n, const char* what) {
        if (end_ - pos_ < n)
            throw ModelIoError(std::string("model file truncated while reading ") + what);
    }

    const std::string& data_;
    std::size_t end_;
    std::size_t pos_ = 0;
};

void append_vector(std::string& buf, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(buf, v[i]);
}

void append_matrix(std::string& buf, const Eigen::MatrixXd& m) {
    for (Eigen::Index col = 0; col < m.cols(); ++col)
        for (Eigen::Index row = 0; row < m.rows(); ++row) put_f64(buf, m(row, col));
}

Eigen::VectorXd read_vector(Parser& parser, Eigen::Index n, const char* what) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = parser.f64(what);
    return v;
}

Eigen::MatrixXd read_matrix(Parser& parser, Eigen::Index rows, Eigen::Index cols,
                            const char* what) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index col = 0; col < cols; ++col)
        for (Eigen::Index row = 0; row < rows; ++row) m(row, col) = parser.f64(what);
    return m;
}

}  // namespace

void save_model(const DbnModel& model, std::ostream& out) {
    model.check_consistent();

    std::string buf;
    buf.append(kModelMagic, sizeof(kModelMagic));
    put_u32(buf, kModelVersion);
    put_u32(buf, static_cast<std::uint32_t>(model.input_dim));
    put_u32(buf, static_cast<std::uint32_t>(model.layers.size()));
    for (const RbmParams& layer : model.layers)
        put_u32(buf, static_cast<std::uint32_t>(layer.hidden_size()));
    put_u32(buf, static_cast<std::uint32_t>(model.num_classes()));
    put_u32(buf, model.preprocess_hash);

    for (const RbmParams& layer : model.layers) {
        append_vector(buf, layer.visible_bias);
        append_vector(buf, layer.hidden_bias);
        append_matrix(buf, layer.weights);
    }
    append_matrix(buf, model.head.weights);
    append_vector(buf, model.head.bias);

    put_u32(buf, static_cast<std::uint32_t>(model.structure_log.size()));
    for (const StructureEvent& event : model.structure_log) {
        const std::string line = event.to_line();
        put_u32(buf, static_cast<std::uint32_t>(line.size()));
        buf.append(line);
    }

    put_u32(buf, crc32c(buf));
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw ModelIoError("failed to write model stream");
}

void save_model(const DbnModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ModelIoError("cannot open " + path.string() + " for writing");
    save_model(model, out);
    out.flush();
    if (!out) throw ModelIoError("failed to write " + path.string());
}

DbnModel load_model(std::istream& in) {
    std::ostringstream sink;
    sink << in.rdbuf();
    const std::string data = sink.str();

    // Smallest legal file: magic + version + empty-ish header + checksum.
    if (data.size() < sizeof(kModelMagic) + 4 + 4 + 4 + 4 + 4 + 4 + 4)
        throw ModelIoError("model file truncated: only " + std::to_string(data.size()) +
                           " bytes");
    if (std::memcmp(data.data(), kModelMagic, sizeof(kModelMagic)) != 0)
        throw ModelIoError("bad magic: not a model file");

    const std::size_t body_end = data.size() - 4;
    Parser trailer(data, data.size());
    (void)trailer.bytes(body_end, "body");
    const std::uint32_t stored_crc = trailer.u32("checksum");
    const std::uint32_t actual_crc = crc32c(data.data(), body_end);
    if (stored_crc != actual_crc) {
        std::ostringstream msg;
        msg << "checksum mismatch: stored 0x" << std::hex << std::uppercase << stored_crc
            << ", computed 0x" << actual_crc << " -- file is corrupt";
        throw ModelIoError(msg.str());
    }

    Parser parser(data, body_end);
    (void)parser.bytes(sizeof(kModelMagic), "magic");
    const std::uint32_t version = parser.u32("version");
    if (version != kModelVersion)
        throw ModelIoError("unsupported model version " + std::to_string(version) +
                           " (this build reads version " + std::to_string(kModelVersion) + ")");

    DbnModel model;
    model.input_dim = static_cast<Eigen::Index>(parser.u32("input dim"));
    const std::uint32_t n_layers = parser.u32("layer count");
    if (n_layers == 0) throw ModelIoError("model file declares zero layers");
    std::vector<Eigen::Index> hidden(n_layers);
    for (std::uint32_t k = 0; k < n_layers; ++k)
        hidden[k] = static_cast<Eigen::Index>(parser.u32("hidden size"));
    const std::uint32_t n_classes = parser.u32("class count");
    model.preprocess_hash = parser.u32("preprocess hash");

    Eigen::Index visible = model.input_dim;
    for (std::uint32_t k = 0; k < n_layers; ++k) {
        RbmParams layer;
        layer.visible_bias = read_vector(parser, visible, "visible bias");
        layer.hidden_bias = read_vector(parser, hidden[k], "hidden bias");
        layer.weights = read_matrix(parser, visible, hidden[k], "weights");
        model.layers.push_back(std::move(layer));
        visible = hidden[k];
    }
    model.head.weights = read_matrix(parser, visible, static_cast<Eigen::Index>(n_classes),
                                     "head weights");
    model.head.bias = read_vector(parser, static_cast<Eigen::Index>(n_classes), "head bias");

    const std::uint32_t n_lines = parser.u32("log line count");
    for (std::uint32_t k = 0; k < n_lines; ++k) {
        const std::uint32_t len = parser.u32("log line length");
        const std::string line = parser.bytes(len, "log line");
        model.structure_log.push_back(StructureEvent::from_line(line));
    }
    if (parser.remaining() != 0)
        throw ModelIoError("model file has " + std::to_string(parser.remaining()) +
                           " trailing bytes before the checksum");

    try {
        model.check_consistent();
    } catch (const std::exception& e) {
        throw ModelIoError(std::string("model file is internally inconsistent: ") + e.what());
    }
    return model;
}

DbnModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelIoError("cannot open " + path.string());
    return load_model(in);
}

}  // namespace adbn
