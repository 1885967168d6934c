#include "fqzkit/cli.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"

#include "fqzkit/container.hpp"
#include "fqzkit/errors.hpp"
#include "fqzkit/pipeline.hpp"
#include "fqzkit/qual_segment.hpp"
#include "fqzkit/ref_index.hpp"

namespace fqzkit {
namespace {

struct IndexArgs {
    std::string ref;
    std::string out;
    uint32_t k = 15;
};

struct CompressArgs {
    CompressOptions opt;
    std::string quality = "huffman";
    unsigned bins = 1;
    bool drop_names = false;
    unsigned threads = 1;
    CLI::Option* bins_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
};

struct DecompressArgs {
    DecompressOptions opt;
    unsigned threads = 1;
    CLI::Option* threads_opt = nullptr;
};

struct InfoArgs {
    std::string archive;
};

// The app plus everything its options bind to, so help rendering and parsing
// share one definition of the command surface.
struct Cli {
    CLI::App app{"reference-based FASTQ compression", "fqzkit"};
    CLI::App* index_cmd = nullptr;
    CLI::App* compress_cmd = nullptr;
    CLI::App* decompress_cmd = nullptr;
    CLI::App* info_cmd = nullptr;
    IndexArgs index;
    CompressArgs compress;
    DecompressArgs decompress;
    InfoArgs info;
};

std::unique_ptr<Cli> make_cli() {
    auto cli = std::make_unique<Cli>();
    CLI::App& app = cli->app;
    app.require_subcommand(1);

    CLI::App* idx = app.add_subcommand("index", "build a seed index over a FASTA reference");
    cli->index_cmd = idx;
    idx->add_option("ref", cli->index.ref, "reference FASTA (plain or gzipped)")->required();
    idx->add_option("-o,--output", cli->index.out, "index file to write")->required();
    idx->add_option("-k,--seed-length", cli->index.k, "seed length")
        ->check(CLI::Range(kMinSeedLen, kMaxSeedLen))
        ->capture_default_str();

    CLI::App* cmp = app.add_subcommand("compress", "compress FASTQ against an indexed reference");
    cli->compress_cmd = cmp;
    CompressArgs& ca = cli->compress;
    cmp->add_option("inputs", ca.opt.inputs, "input FASTQ (exactly two with --pair)")
        ->required()
        ->expected(1, 2);
    cmp->add_option("--ref", ca.opt.ref_path, "reference FASTA")->required();
    cmp->add_option("--index", ca.opt.index_path, "seed index built by 'fqzkit index'")->required();
    cmp->add_option("-o,--output", ca.opt.output, "archive to write")->required();
    cmp->add_flag("--pair", ca.opt.paired, "treat the two inputs as mate files");
    cmp->add_flag("--reorder", ca.opt.reorder, "store reads sorted by mapped position");
    cmp->add_flag("--drop-names", ca.drop_names, "do not store read names");
    cmp->add_flag("--gzip-output", ca.opt.gzip_output, "mark the archive so decompression writes gzipped FASTQ");
    cmp->add_option("--quality", ca.quality, "quality coder")
        ->check(CLI::IsMember({"huffman", "dominant"}))
        ->capture_default_str();
    ca.bins_opt = cmp->add_option("--bins", ca.bins, "quantize qualities to this many bins (lossy)")
                      ->check(CLI::Range(1u, 93u));
    cmp->add_option("--reads-per-chunk", ca.opt.reads_per_chunk, "reads (or pairs) per chunk")
        ->check(CLI::Range(uint32_t(1), uint32_t(100000000)))
        ->capture_default_str();
    ca.threads_opt = cmp->add_option("--threads", ca.threads, "alignment worker threads")
                         ->check(CLI::Range(1u, 1024u));

    CLI::App* dec = app.add_subcommand("decompress", "restore FASTQ from an archive");
    cli->decompress_cmd = dec;
    DecompressArgs& da = cli->decompress;
    dec->add_option("archive", da.opt.archive_path, "archive file")->required();
    dec->add_option("--ref", da.opt.ref_path, "the reference the archive was built against")->required();
    dec->add_option("-o,--output", da.opt.outputs, "output FASTQ (give it twice for a paired archive)")
        ->required()
        ->expected(1, 2);
    da.threads_opt = dec->add_option("--threads", da.threads, "decoder threads")
                         ->check(CLI::Range(1u, 1024u));

    CLI::App* inf = app.add_subcommand("info", "print archive metadata");
    cli->info_cmd = inf;
    inf->add_option("archive", cli->info.archive, "archive file")->required();

    return cli;
}

// --threads wins; otherwise FQZKIT_THREADS, otherwise one worker. A garbage
// environment value is a usage error, not something to silently ignore.
unsigned resolve_threads(const CLI::Option* threads_opt, unsigned cli_value) {
    if (threads_opt->count() > 0) return cli_value;
    const char* env = std::getenv("FQZKIT_THREADS");
    if (env == nullptr || *env == '\0') return 1;
    errno = 0;
    char* end = nullptr;
    unsigned long v = std::strtoul(env, &end, 10);
    if (errno != 0 || end == env || *end != '\0' || v < 1 || v > 1024)
        throw CLI::ValidationError("FQZKIT_THREADS", "must be an integer in [1, 1024]");
    return static_cast<unsigned>(v);
}

void print_seconds(const char* key, double s) {
    std::printf("%s: %.3f\n", key, s);
}

int run_index(const IndexArgs& a) {
    ForwardSequence fseq = build_forward_sequence(a.ref);
    SeedIndex index = build_index(fseq, a.k);
    save_index(index, a.out);
    std::cout << "reference_bases: " << fseq.bases.size() << '\n';
    std::cout << "contigs: " << fseq.source_boundaries.size() << '\n';
    std::cout << "seed_length: " << index.k << '\n';
    std::cout << "seed_positions: " << index.forward_index.size() << '\n';
    std::cout << "index_file: " << a.out << '\n';
    return 0;
}

int run_compress(CompressArgs& a) {
    a.opt.keep_names = !a.drop_names;
    a.opt.quality_mode = a.quality == "dominant" ? QualityMode::dominant : QualityMode::huffman;
    if (a.bins_opt->count() > 0) a.opt.lossy_bins = a.bins;
    a.opt.threads = resolve_threads(a.threads_opt, a.threads);

    CompressionReport r = compress_file(a.opt);

    std::cout << "records: " << r.records << '\n';
    std::cout << "matched: " << r.matched << '\n';
    std::cout << "chunks: " << r.chunks << '\n';
    std::cout << "input_bytes: " << r.input_bytes << '\n';
    std::cout << "output_bytes: " << r.output_bytes << '\n';
    if (r.output_bytes > 0)
        std::printf("ratio: %.3f\n", double(r.input_bytes) / double(r.output_bytes));
    for (size_t f = 0; f < r.plan.size(); ++f)
        std::cout << "codec." << field_name(unsigned(f)) << ": " << codec_name(r.plan[f].id) << '\n';
    print_seconds("index_seconds", r.index_s);
    print_seconds("align_seconds", r.align_s);
    print_seconds("sequence_seconds", r.sequence_s);
    print_seconds("quality_seconds", r.quality_s);
    print_seconds("wall_seconds", r.wall_s);
    if (a.opt.threads > 1) {
        std::cout << "peak_in_flight: " << r.peak_in_flight << '\n';
        std::cout << "in_flight_bound: " << r.in_flight_bound << '\n';
    }
    return 0;
}

int run_decompress(DecompressArgs& a) {
    a.opt.threads = resolve_threads(a.threads_opt, a.threads);
    DecompressionReport r = decompress_file(a.opt);
    std::cout << "records: " << r.records << '\n';
    std::cout << "chunks: " << r.chunks << '\n';
    print_seconds("wall_seconds", r.wall_s);
    return 0;
}

int run_info(const InfoArgs& a) {
    ArchiveReader reader(a.archive);
    const FileHeader& h = reader.header();
    std::cout << "version: " << h.version << '\n';
    std::cout << "seed_length: " << unsigned(h.seed_k) << '\n';
    std::cout << "quality: " << (h.quality_mode == 1 ? "dominant" : "huffman") << '\n';
    std::cout << "lossy_bins: " << unsigned(h.lossy_bins) << '\n';
    std::cout << "paired: " << (h.paired() ? "yes" : "no") << '\n';
    std::cout << "reorder: " << (h.reorder() ? "yes" : "no") << '\n';
    std::cout << "names: " << (h.keep_names() ? "kept" : "dropped") << '\n';
    std::cout << "gzip_output: " << (h.gzip_output() ? "yes" : "no") << '\n';
    std::cout << "reads_per_chunk: " << h.reads_per_chunk << '\n';
    std::printf("ref_checksum: %016llx\n", static_cast<unsigned long long>(h.ref_checksum));
    std::cout << "codec_registry: " << h.codec_registry_version << '\n';
    std::cout << "chunks: " << reader.chunk_count() << '\n';

    uint64_t reads = 0;
    uint64_t matched = 0;
    for (size_t i = 0; i < reader.chunk_count(); ++i) {
        ChunkHeader ch = reader.read_chunk_header(i);
        const ChunkEntry& e = reader.chunks()[i];
        reads += ch.read_count;
        matched += ch.matched_count;
        std::cout << "chunk " << ch.ordinal << ": reads=" << ch.read_count
                  << " matched=" << ch.matched_count << " bytes=" << e.size << '\n';
    }
    std::cout << "total_reads: " << reads << '\n';
    std::cout << "total_matched: " << matched << '\n';
    return 0;
}

} // namespace

std::string cli_help(const std::string& subcommand) {
    auto cli = make_cli();
    if (subcommand.empty()) return cli->app.help();
    return cli->app.get_subcommand(subcommand)->help();
}

int cli_main(int argc, const char* const* argv) {
    auto cli = make_cli();
    try {
        cli->app.parse(argc, argv);
        if (cli->compress_cmd->parsed()) {
            CompressArgs& a = cli->compress;
            if (a.opt.paired != (a.opt.inputs.size() == 2))
                throw CLI::ValidationError(
                    "inputs", "--pair requires exactly two inputs, and two inputs require --pair");
            return run_compress(a);
        }
        if (cli->index_cmd->parsed()) return run_index(cli->index);
        if (cli->decompress_cmd->parsed()) return run_decompress(cli->decompress);
        if (cli->info_cmd->parsed()) return run_info(cli->info);
        return 0; // unreachable, require_subcommand(1) guarantees a match
    } catch (const CLI::ParseError& e) {
        // CLI11's own exit codes are all over the map; the contract here is
        // 0 for help and 1 for every usage problem.
        int code = cli->app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ref_mismatch_error& e) {
        std::cerr << "fqzkit: " << e.what() << '\n';
        return 4;
    } catch (const corruption_error& e) {
        std::cerr << "fqzkit: " << e.what() << '\n';
        return 3;
    } catch (const io_error& e) {
        std::cerr << "fqzkit: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "fqzkit: " << e.what() << '\n';
        return 1;
    }
}

} // namespace fqzkit
