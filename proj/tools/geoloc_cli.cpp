#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "geoloc/errors.hpp"
#include "geoloc/pipeline.hpp"

using namespace geoloc;

namespace {

int run(int argc, char** argv) {
    CLI::App app{"Cross-view geo-localization by multi-query nearest-neighbor matching"};
    app.require_subcommand(1);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic city as JSONL records");
    SynthConfig scfg;
    std::string synth_out = "city.jsonl";
    synth_cmd->add_option("--city", scfg.city, "City name prefix");
    synth_cmd->add_option("--locations", scfg.n_locations, "Number of GPS locations");
    synth_cmd->add_option("--spacing", scfg.grid_spacing_m, "Grid spacing in meters");
    synth_cmd->add_option("--buildings-min", scfg.buildings_min, "Min buildings per image");
    synth_cmd->add_option("--buildings-max", scfg.buildings_max, "Max buildings per image");
    synth_cmd->add_option("--noise", scfg.feature_noise_sigma, "Feature noise sigma");
    synth_cmd->add_option("--dropout", scfg.detection_dropout_prob, "Detection dropout probability");
    synth_cmd->add_option("--origin-lat", scfg.origin.lat, "Origin latitude");
    synth_cmd->add_option("--origin-lon", scfg.origin.lon, "Origin longitude");
    synth_cmd->add_option("--seed", scfg.seed, "RNG seed");
    synth_cmd->add_option("-o,--out", synth_out, "Output JSONL path");

    // train
    auto* train_cmd = app.add_subcommand("train", "Fit the embedder on matched/unmatched pairs");
    std::string train_records, train_model = "embedder.txt";
    int epochs = 20, ratio = 20, out_dim = 32, hidden = 0;
    double lr = 0.01, margin = 1.0;
    std::uint64_t train_seed = 0;
    train_cmd->add_option("--records", train_records, "Input JSONL records")->required();
    train_cmd->add_option("--epochs", epochs, "Training epochs");
    train_cmd->add_option("--lr", lr, "Learning rate");
    train_cmd->add_option("--ratio", ratio, "Negatives per positive");
    train_cmd->add_option("--dim", out_dim, "Embedding dimension");
    train_cmd->add_option("--hidden", hidden, "Hidden layer width (0 = linear)");
    train_cmd->add_option("--margin", margin, "Contrastive margin");
    train_cmd->add_option("--seed", train_seed, "RNG seed");
    train_cmd->add_option("-o,--out", train_model, "Output model path");

    // embed
    auto* embed_cmd = app.add_subcommand("embed", "Fill embeddings from a trained model");
    std::string embed_records_path, embed_model, embed_out = "embedded.jsonl";
    embed_cmd->add_option("--records", embed_records_path, "Input JSONL records")->required();
    embed_cmd->add_option("--model", embed_model, "Embedder model file")->required();
    embed_cmd->add_option("-o,--out", embed_out, "Output JSONL path");

    // localize
    auto* loc_cmd = app.add_subcommand("localize", "Run localization methods");
    std::string loc_records, loc_model, loc_out = "results.csv", query_view = "street";
    std::vector<std::string> methods{"domset"};
    DomsetParams params;
    params.k = -1;
    int n_views = 4;
    std::uint64_t loc_seed = 0;
    bool no_timings = false;
    loc_cmd->add_option("--records", loc_records, "JSONL with both views (embedded)")->required();
    loc_cmd->add_option("--model", loc_model, "Embedder model (needed for full_image)");
    loc_cmd->add_option("--query-view", query_view, "Query view: street or bird");
    loc_cmd->add_option("--views", n_views, "Views per query: 1 or 4");
    loc_cmd->add_option("--method", methods, "Methods: domset gmcp nn1 random full_image");
    loc_cmd->add_option("--k", params.k, "Neighbors per query building (default 100 street, 10 bird)");
    loc_cmd->add_option("--sigma", params.sigma, "Distance kernel scale (km)");
    loc_cmd->add_option("--alpha", params.alpha, "Similarity mix weight");
    loc_cmd->add_option("--seed", loc_seed, "RNG seed");
    loc_cmd->add_flag("--no-timings", no_timings, "Write runtime_ms as 0 for reproducible output");
    loc_cmd->add_option("-o,--out", loc_out, "Output results CSV");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Accuracy-vs-threshold curves from results");
    std::string eval_in, eval_out = "curves.csv";
    std::vector<double> thresholds{50, 100, 150, 200, 250, 300, 400, 500};
    eval_cmd->add_option("--results", eval_in, "Results CSV")->required();
    eval_cmd->add_option("--thresholds", thresholds, "Thresholds in meters, ascending");
    eval_cmd->add_option("-o,--out", eval_out, "Output curves CSV");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Runtime benchmark: domset vs exact GMCP");
    std::vector<int> nc_list{2, 3, 4}, k_list{2, 4, 6, 8, 10};
    int trials = 3;
    std::uint64_t bench_seed = 0;
    std::string bench_out = "bench.csv";
    bench_cmd->add_option("--nc", nc_list, "Cluster counts");
    bench_cmd->add_option("--k", k_list, "Neighbors per cluster");
    bench_cmd->add_option("--trials", trials, "Trials per shape");
    bench_cmd->add_option("--seed", bench_seed, "RNG seed");
    bench_cmd->add_option("-o,--out", bench_out, "Output CSV");

    CLI11_PARSE(app, argc, argv);

    if (synth_cmd->parsed()) {
        const SynthCity city = generate(scfg);
        std::vector<BuildingRecord> all = city.street_records;
        all.insert(all.end(), city.bird_records.begin(), city.bird_records.end());
        emit_records(all, synth_out);
        std::printf("wrote %zu records (%zu street, %zu bird) to %s\n", all.size(),
                    city.street_records.size(), city.bird_records.size(), synth_out.c_str());
        return 0;
    }

    if (train_cmd->parsed()) {
        const auto records = ingest_records(train_records);
        // Rebuild pair structure from ids: matched pairs share the id prefix
        // before the view suffix.
        SynthCity city;
        for (const auto& r : records) {
            city.location_of_record.emplace(r.id, 0);
            (r.view == View::street ? city.street_records : city.bird_records).push_back(r);
        }
        city.locations.push_back({0, 0});
        const auto pairs = make_pair_dataset(city, ratio, train_seed);
        const int in_dim = static_cast<int>(records.front().raw_features.size());
        Embedder e = make_embedder(in_dim, out_dim, hidden, margin, train_seed);
        TrainReport report;
        e = train_embedder(pairs, epochs, lr, train_seed, std::move(e), &report);
        save_embedder(e, train_model);
        std::printf("trained on %zu pairs; loss %.5f -> %.5f; model %s\n", pairs.size(),
                    report.epoch_loss.empty() ? 0.0 : report.epoch_loss.front(),
                    report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back(),
                    train_model.c_str());
        return 0;
    }

    if (embed_cmd->parsed()) {
        auto records = ingest_records(embed_records_path);
        const Embedder e = load_embedder(embed_model);
        embed_records(records, e);
        emit_records(records, embed_out);
        std::printf("embedded %zu records to %s\n", records.size(), embed_out.c_str());
        return 0;
    }

    if (loc_cmd->parsed()) {
        const auto records = ingest_records(loc_records);
        const View qview = parse_view(query_view);
        if (params.k < 0) params.k = qview == View::street ? 100 : 10;

        std::vector<BuildingRecord> refs, queries;
        for (const auto& r : records)
            (r.view == qview ? queries : refs).push_back(r);
        if (queries.empty()) throw DataError("localize: no records in query view");
        const ReferenceIndex index = build_index(std::move(refs));
        const auto groups = group_queries(queries, n_views);

        Embedder model;
        bool has_model = !loc_model.empty();
        if (has_model) model = load_embedder(loc_model);
        std::vector<ImageEntry> image_index;

        std::vector<LocalizationResult> results;
        std::mt19937_64 rand_rng(loc_seed);
        for (const auto& method : methods) {
            if (method == "domset") {
                for (const auto& g : groups) results.push_back(localize_domset(g, index, params));
            } else if (method == "gmcp") {
                for (const auto& g : groups)
                    results.push_back(localize_gmcp(g, index, params, 10, loc_seed));
            } else if (method == "nn1") {
                for (const auto& g : groups) results.push_back(localize_nn1(g, index));
            } else if (method == "random") {
                for (const auto& g : groups) results.push_back(localize_random(g, index, rand_rng));
            } else if (method == "full_image") {
                if (!has_model) throw UsageError("localize: full_image needs --model");
                if (image_index.empty()) image_index = build_image_index(index.records(), model);
                for (const auto& g : groups)
                    results.push_back(localize_full_image(g, image_index, model));
            } else {
                throw UsageError("localize: unknown method '" + method + "'");
            }
        }
        write_results_csv(results, loc_out, !no_timings);
        std::printf("wrote %zu results (%zu queries) to %s\n", results.size(), groups.size(),
                    loc_out.c_str());
        return 0;
    }

    if (eval_cmd->parsed()) {
        const auto results = read_results_csv(eval_in);
        const AccuracyCurve curve = evaluate(results, thresholds);
        write_curve_csv(curve, eval_out);
        for (const auto& [method, acc] : curve.accuracy) {
            std::printf("%-12s", method.c_str());
            for (std::size_t i = 0; i < thresholds.size(); ++i)
                std::printf(" %4.0fm=%.3f", thresholds[i], acc[i]);
            std::printf("\n");
        }
        return 0;
    }

    if (bench_cmd->parsed()) {
        const auto rows = bench_runtime(nc_list, k_list, trials, bench_seed);
        write_bench_csv(rows, bench_out);
        std::printf("wrote %zu benchmark rows to %s\n", rows.size(), bench_out.c_str());
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const ScaleError& e) {
        std::fprintf(stderr, "scale error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
