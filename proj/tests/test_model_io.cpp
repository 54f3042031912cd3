#include <doctest.h>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "adbn/crc32c.hpp"
#include "adbn/model_io.hpp"
#include "test_util.hpp"

using namespace adbn;
using testutil::bitwise_equal;
using testutil::random_model;
using testutil::random_unit_inputs;
using testutil::TempDir;

namespace {

std::string serialize(const DbnModel& model) {
    std::ostringstream out(std::ios::binary);
    save_model(model, out);
    return out.str();
}

DbnModel deserialize(const std::string& bytes) {
    std::istringstream in(bytes, std::ios::binary);
    return load_model(in);
}

// Rewrites the trailing checksum so edits upstream of it stay "valid".
std::string with_fixed_checksum(std::string bytes) {
    const std::uint32_t crc = crc32c(bytes.data(), bytes.size() - 4);
    for (int i = 0; i < 4; ++i)
        bytes[bytes.size() - 4 + static_cast<std::size_t>(i)] =
            static_cast<char>((crc >> (8 * i)) & 0xff);
    return bytes;
}

std::string load_error(const std::string& bytes) {
    try {
        deserialize(bytes);
    } catch (const ModelIoError& e) {
        return e.what();
    }
    return {};
}

// A model whose structure log uses every event kind and still replays to the
// final sizes {5, 3}.
DbnModel rich_model(Rng& rng) {
    DbnModel model = random_model(6, {5, 3}, 2, rng, 0.4);
    model.preprocess_hash = 0xDEADBEEF;
    model.structure_log.clear();
    auto push = [&](StructureEvent event) { model.structure_log.push_back(std::move(event)); };
    StructureEvent event;
    event.kind = StructureEvent::Kind::layer_added;
    event.layer = 0;
    event.epoch = 0;
    event.size = 4;
    push(event);
    event = {};
    event.kind = StructureEvent::Kind::neuron_generated;
    event.layer = 0;
    event.epoch = 7;
    event.parent = 1;
    push(event);
    event = {};
    event.kind = StructureEvent::Kind::layer_added;
    event.layer = 1;
    event.epoch = 9;
    event.size = 6;
    push(event);
    event = {};
    event.kind = StructureEvent::Kind::neurons_annihilated;
    event.layer = 1;
    event.epoch = 12;
    event.removed = {0};
    push(event);
    event = {};
    event.kind = StructureEvent::Kind::note;
    event.epoch = 13;
    event.text = "checkpoint with spaces and = signs";
    push(event);
    event = {};
    event.kind = StructureEvent::Kind::neurons_pruned;
    event.layer = 1;
    event.epoch = -1;
    event.removed = {1, 4};
    push(event);
    model.check_consistent();
    return model;
}

}  // namespace

TEST_SUITE("model_io") {

TEST_CASE("a stream round-trip preserves every byte of the model") {
    Rng rng(201);
    const DbnModel model = rich_model(rng);
    const DbnModel loaded = deserialize(serialize(model));

    CHECK(bitwise_equal(loaded, model));
    CHECK(loaded.input_dim == model.input_dim);
    CHECK(loaded.preprocess_hash == 0xDEADBEEF);
    REQUIRE(loaded.structure_log.size() == model.structure_log.size());
    for (std::size_t i = 0; i < model.structure_log.size(); ++i)
        CHECK(loaded.structure_log[i].to_line() == model.structure_log[i].to_line());

    // Identical bits give identical outputs, down to the last ulp.
    Rng input_rng(203);
    for (const Eigen::VectorXd& v : random_unit_inputs(model.input_dim, 100, input_rng)) {
        const Eigen::VectorXd a = forward(model, v);
        const Eigen::VectorXd b = forward(loaded, v);
        for (Eigen::Index k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
    }
}

TEST_CASE("the path overloads write and read the same container") {
    Rng rng(205);
    const DbnModel model = rich_model(rng);
    TempDir dir("adbn-io");
    const auto file = dir.path() / "model.adbn";
    save_model(model, file);
    CHECK(bitwise_equal(load_model(file), model));

    std::ifstream in(file, std::ios::binary);
    CHECK(bitwise_equal(load_model(in), model));

    CHECK_THROWS_AS(load_model(dir.path() / "missing.adbn"), ModelIoError);
    CHECK_THROWS_AS(save_model(model, dir.path() / "no-such-dir" / "model.adbn"), ModelIoError);
}

TEST_CASE("every truncation is rejected") {
    Rng rng(207);
    const std::string full = serialize(rich_model(rng));
    for (std::size_t n = 0; n < full.size(); ++n)
        CHECK_THROWS_AS(deserialize(full.substr(0, n)), ModelIoError);
}

TEST_CASE("a single flipped byte is caught by the checksum") {
    Rng rng(209);
    const std::string full = serialize(rich_model(rng));
    for (const std::size_t pos : {std::size_t{9}, full.size() / 2, full.size() - 6}) {
        std::string bent = full;
        bent[pos] = static_cast<char>(bent[pos] ^ 0x01);
        CHECK(load_error(bent).find("checksum") != std::string::npos);
    }
    std::string not_magic = full;
    not_magic[3] = 'X';
    CHECK(load_error(not_magic).find("bad magic") != std::string::npos);
}

TEST_CASE("unknown container versions name both sides") {
    Rng rng(211);
    std::string bytes = serialize(rich_model(rng));
    bytes[8] = 2;  // version field follows the 8-byte magic
    const std::string message = load_error(with_fixed_checksum(bytes));
    CHECK(message.find("unsupported model version 2") != std::string::npos);
    CHECK(message.find("reads version 1") != std::string::npos);
}

TEST_CASE("bytes between the log and the checksum are rejected") {
    Rng rng(213);
    std::string bytes = serialize(rich_model(rng));
    bytes.insert(bytes.size() - 4, "XYZW");
    CHECK(load_error(with_fixed_checksum(bytes)).find("trailing bytes") != std::string::npos);
}

TEST_CASE("a header declaring zero layers is rejected") {
    std::string body(kModelMagic, sizeof(kModelMagic));
    auto put_u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) body.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    };
    put_u32(kModelVersion);
    put_u32(4);  // input_dim
    put_u32(0);  // n_layers
    put_u32(0);
    put_u32(0);
    put_u32(0);  // padding so the file clears the minimum-size gate
    put_u32(crc32c(body.data(), body.size()));
    CHECK(load_error(body).find("zero layers") != std::string::npos);
}

TEST_CASE("non-finite parameters make the file unloadable") {
    Rng rng(215);
    std::string bytes = serialize(random_model(1, {1}, 2, rng));
    // Header is 8 + 6 * 4 = 32 bytes for one layer; the visible bias f64
    // sits first, the hidden bias second. Overwrite the hidden bias with NaN.
    const std::uint64_t nan_bits = 0x7FF8000000000000ull;
    for (int i = 0; i < 8; ++i)
        bytes[40 + static_cast<std::size_t>(i)] = static_cast<char>((nan_bits >> (8 * i)) & 0xff);
    CHECK(load_error(with_fixed_checksum(bytes)).find("inconsistent") != std::string::npos);
}

TEST_CASE("a mangled structure log line is rejected") {
    Rng rng(217);
    std::string bytes = serialize(rich_model(rng));
    const std::size_t pos = bytes.find("neuron-gen");
    REQUIRE(pos != std::string::npos);
    bytes[pos + 9] = 'x';  // neuron-gen -> neuron-gex, same length
    CHECK(load_error(with_fixed_checksum(bytes)).find("unknown structure log event") !=
          std::string::npos);
}

TEST_CASE("writing to a dead stream reports the failure") {
    Rng rng(219);
    const DbnModel model = random_model(3, {2}, 2, rng);
    std::ostringstream sink(std::ios::binary);
    sink.setstate(std::ios::badbit);
    CHECK_THROWS_AS(save_model(model, sink), ModelIoError);
}

}  // TEST_SUITE
