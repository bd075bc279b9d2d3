#include <doctest.h>

#include <filesystem>

#include "pmilab/error.hpp"
#include "pmilab/io.hpp"
#include "pmilab/rng.hpp"

using namespace pmilab;

TEST_CASE("dataset jsonl round trip") {
    Dataset data(2);
    data[0].vector = {0.125, -1.0};
    data[0].target_pmi = 0.5877866649021191;
    data[0].group = 0;
    data[0].ctx_index = 1;
    data[0].resp_index = 1;
    data[1].vector = {1.0, 0.1};
    data[1].label = Label::negative;
    data[1].group = 0;
    data[1].round = 3;
    data[1].dialogue_id = "d9";
    data[1].annotation = 2.5;
    const auto path = std::filesystem::temp_directory_path() / "pmilab-test-data.jsonl";
    write_dataset(path, data);
    const auto back = read_dataset(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].vector == data[0].vector);
    CHECK(back[0].target_pmi == data[0].target_pmi);
    CHECK(back[0].label == Label::positive);
    CHECK(back[1].label == Label::negative);
    CHECK(back[1].round == 3);
    CHECK(back[1].dialogue_id == "d9");
    CHECK(back[1].annotation == 2.5);
    std::filesystem::remove(path);
}

TEST_CASE("malformed dataset lines name the line") {
    const auto path = std::filesystem::temp_directory_path() / "pmilab-test-bad.jsonl";
    write_text(path, "{\"vector\": [1], \"label\": 1}\n{\"vector\": [1], \"label\": 5}\n");
    CHECK_THROWS_WITH(read_dataset(path), doctest::Contains(":2:"));
    write_text(path, "{\"vector\": [1], \"label\": 1}\nnot json\n");
    CHECK_THROWS_WITH(read_dataset(path), doctest::Contains(":2:"));
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint round trip") {
    Rng rng(1);
    const auto params = init_params(3, rng, 6, 4);
    CheckpointMeta meta;
    meta.seed = 42;
    meta.objective = "pmiscore";
    meta.kernels = "scalar";
    meta.val_metric = "mse";
    meta.best_val = 0.01;
    meta.best_epoch = 7;
    const auto path = std::filesystem::temp_directory_path() / "pmilab-test-ck.json";
    save_checkpoint(path, params, meta);
    const auto ck = load_checkpoint(path);
    CHECK(ck.params.w1 == params.w1);
    CHECK(ck.params.w2 == params.w2);
    CHECK(ck.params.w3 == params.w3);
    CHECK(ck.params.a1 == params.a1);
    CHECK(ck.params.h1 == 6);
    CHECK(ck.meta.objective == "pmiscore");
    CHECK(ck.meta.rng == "splitmix64");
    CHECK(ck.meta.best_epoch == 7);

    auto doc = checkpoint_to_json(params, meta);
    doc["weights"]["b2"].erase(0);
    CHECK_THROWS_WITH(checkpoint_from_json(nlohmann::json::parse(doc.dump())), doctest::Contains("b2"));
    std::filesystem::remove(path);
}
