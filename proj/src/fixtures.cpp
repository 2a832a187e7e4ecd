#include "lfopt/fixtures.hpp"

#include <cassert>
#include <charconv>

namespace lfopt {

namespace {

// Incremental graph builder. Nodes are appended in execution order, so labels
// are topological by construction.
class Builder {
public:
    Builder(int input_hw, int64_t input_c, int bpe) : bpe_(bpe) {
        input_shape_ = TensorSpec{{1, input_c, input_hw, input_hw}, bpe};
    }

    // Adds a node fed by `from` (node ids; empty = graph input).
    int add(OpKind kind, TensorSpec out, std::vector<int> from, std::pair<int, int> k = {1, 1},
            int stride = 1, uint64_t weight_bytes = 0) {
        int id = static_cast<int>(g_.nodes.size());
        OpNode nd;
        nd.id = id;
        nd.kind = kind;
        nd.kernel_hw = k;
        nd.stride = stride;
        nd.weight_bytes = weight_bytes;
        nd.output = out;
        g_.nodes.push_back(nd);
        if (from.empty()) g_.graph_inputs.emplace_back(id, input_shape_);
        for (int f : from) g_.edges.push_back({f, id});
        return id;
    }

    TensorSpec shape_of(int id) const { return g_.nodes[static_cast<size_t>(id)].output; }

    int conv(int from, int64_t c_out, int k, int stride, bool depthwise = false) {
        TensorSpec in = from < 0 ? input_shape_ : shape_of(from);
        int64_t c_in = in.channels();
        int64_t hw = (in.height() + stride - 1) / stride; // same padding
        uint64_t w = depthwise
                         ? static_cast<uint64_t>(k) * k * static_cast<uint64_t>(c_out) * bpe_
                         : static_cast<uint64_t>(k) * k * static_cast<uint64_t>(c_in) *
                               static_cast<uint64_t>(c_out) * bpe_;
        std::vector<int> from_v;
        if (from >= 0) from_v.push_back(from);
        return add(depthwise ? OpKind::dwconv : OpKind::conv, TensorSpec{{1, c_out, hw, hw}, bpe_},
                   from_v, {k, k}, stride, w);
    }

    int relu(int from) { return add(OpKind::activation, shape_of(from), {from}); }

    int maxpool(int from, int k, int stride) {
        TensorSpec in = shape_of(from);
        int64_t hw = (in.height() + stride - 1) / stride;
        return add(OpKind::pool_max, TensorSpec{{1, in.channels(), hw, hw}, bpe_}, {from}, {k, k},
                   stride);
    }

    int global_pool(int from) {
        TensorSpec in = shape_of(from);
        return add(OpKind::global_pool, TensorSpec{{1, in.channels(), 1, 1}, bpe_}, {from});
    }

    int fc(int from, int64_t features_out) {
        TensorSpec in = shape_of(from);
        uint64_t w = in.bytes() / static_cast<uint64_t>(bpe_) * static_cast<uint64_t>(features_out) *
                     static_cast<uint64_t>(bpe_);
        return add(OpKind::fc_matmul, TensorSpec{{1, features_out, 1, 1}, bpe_}, {from}, {1, 1}, 1,
                   w);
    }

    int res_add(int a, int b) { return add(OpKind::add, shape_of(a), {a, b}); }

    int mul(int a, int b) { return add(OpKind::mul, shape_of(a), {a, b}); }

    int concat(const std::vector<int>& from) {
        TensorSpec out = shape_of(from.front());
        int64_t c = 0;
        for (int f : from) c += shape_of(f).channels();
        out.dims[1] = c;
        return add(OpKind::concat, out, from);
    }

    int softmax(int from) { return add(OpKind::softmax, shape_of(from), {from}); }

    CompGraph take(int output) {
        g_.graph_outputs.push_back(output);
        g_.finalize();
        return std::move(g_);
    }

private:
    CompGraph g_;
    TensorSpec input_shape_;
    int bpe_;
};

CompGraph build_vgg16(int hw, int bpe) {
    Builder b(hw, 3, bpe);
    // 13 convs + 3 fully connected layers, pools after each conv block.
    const std::vector<std::vector<int64_t>> blocks{{64, 64}, {128, 128}, {256, 256, 256},
                                                   {512, 512, 512}, {512, 512, 512}};
    int cur = -1;
    for (const auto& block : blocks) {
        for (int64_t c : block) cur = b.relu(b.conv(cur, c, 3, 1));
        cur = b.maxpool(cur, 2, 2);
    }
    cur = b.relu(b.fc(cur, 4096));
    cur = b.relu(b.fc(cur, 4096));
    cur = b.fc(cur, 1000);
    return b.take(b.softmax(cur));
}

CompGraph build_resnet(int hw, int bpe, const std::vector<int>& blocks_per_stage, bool bottleneck) {
    Builder b(hw, 3, bpe);
    int cur = b.relu(b.conv(-1, 64, 7, 2));
    cur = b.maxpool(cur, 3, 2);
    int64_t base = 64;
    for (size_t stage = 0; stage < blocks_per_stage.size(); ++stage) {
        int64_t width = base << stage;
        int64_t out_c = bottleneck ? width * 4 : width;
        for (int block = 0; block < blocks_per_stage[static_cast<size_t>(stage)]; ++block) {
            int stride = (stage > 0 && block == 0) ? 2 : 1;
            int identity = cur;
            bool reshape = (block == 0 && (stride != 1 || b.shape_of(cur).channels() != out_c));
            if (reshape) identity = b.conv(cur, out_c, 1, stride);
            int body;
            if (bottleneck) {
                body = b.relu(b.conv(cur, width, 1, 1));
                body = b.relu(b.conv(body, width, 3, stride));
                body = b.conv(body, out_c, 1, 1);
            } else {
                body = b.relu(b.conv(cur, width, 3, stride));
                body = b.conv(body, width, 3, 1);
            }
            cur = b.relu(b.res_add(body, identity));
        }
    }
    cur = b.fc(b.global_pool(cur), 1000);
    return b.take(b.softmax(cur));
}

CompGraph build_mobilenet_v2(int hw, int bpe) {
    Builder b(hw, 3, bpe);
    int cur = b.relu(b.conv(-1, 32, 3, 2));
    // (expansion, channels, repeats, first stride)
    const int settings[][4] = {{1, 16, 1, 1},  {6, 24, 2, 2},  {6, 32, 3, 2}, {6, 64, 4, 2},
                               {6, 96, 3, 1},  {6, 160, 3, 2}, {6, 320, 1, 1}};
    for (const auto& s : settings) {
        for (int rep = 0; rep < s[2]; ++rep) {
            int stride = rep == 0 ? s[3] : 1;
            int64_t c_in = b.shape_of(cur).channels();
            int entry = cur;
            int body = cur;
            if (s[0] != 1) body = b.relu(b.conv(body, c_in * s[0], 1, 1));
            body = b.relu(b.conv(body, b.shape_of(body).channels(), 3, stride, /*depthwise=*/true));
            body = b.conv(body, s[1], 1, 1);
            cur = (stride == 1 && c_in == s[1]) ? b.res_add(body, entry) : body;
        }
    }
    cur = b.relu(b.conv(cur, 1280, 1, 1));
    cur = b.fc(b.global_pool(cur), 1000);
    return b.take(b.softmax(cur));
}

CompGraph build_squeezenet(int hw, int bpe) {
    Builder b(hw, 3, bpe);
    auto fire = [&](int from, int64_t squeeze, int64_t expand) {
        int s = b.relu(b.conv(from, squeeze, 1, 1));
        int e1 = b.relu(b.conv(s, expand, 1, 1));
        int e3 = b.relu(b.conv(s, expand, 3, 1));
        return b.concat({e1, e3});
    };
    int cur = b.relu(b.conv(-1, 96, 7, 2));
    cur = b.maxpool(cur, 3, 2);
    cur = fire(cur, 16, 64);
    cur = fire(cur, 16, 64);
    cur = fire(cur, 32, 128);
    cur = b.maxpool(cur, 3, 2);
    cur = fire(cur, 32, 128);
    cur = fire(cur, 48, 192);
    cur = fire(cur, 48, 192);
    cur = fire(cur, 64, 256);
    cur = b.maxpool(cur, 3, 2);
    cur = fire(cur, 64, 256);
    cur = b.relu(b.conv(cur, 1000, 1, 1));
    return b.take(b.softmax(b.global_pool(cur)));
}

// Small trunk with a squeeze-excite style branch: the scale path
// (global_pool -> fc -> fc) rejoins the trunk through a mul, and an outer
// residual add encloses the whole block (nested skip connections).
CompGraph build_se_branch_toy(int hw, int bpe) {
    Builder b(hw, 3, bpe);
    int trunk = b.relu(b.conv(-1, 16, 3, 1));
    int pooled = b.global_pool(trunk);
    int scale = b.fc(b.relu(b.fc(pooled, 8)), 16);
    int scaled = b.mul(trunk, scale);
    int tail = b.conv(scaled, 16, 3, 1);
    int joined = b.relu(b.res_add(tail, trunk));
    return b.take(b.conv(joined, 16, 3, 1));
}

} // namespace

std::string_view to_string(Arch a) {
    switch (a) {
        case Arch::vgg16: return "vgg16";
        case Arch::resnet18: return "resnet18";
        case Arch::resnet50: return "resnet50";
        case Arch::mobilenet_v2: return "mobilenet_v2";
        case Arch::squeezenet: return "squeezenet";
        case Arch::se_branch_toy: return "se_branch_toy";
    }
    return "?";
}

Arch arch_from_string(std::string_view s) {
    for (Arch a : all_arches())
        if (to_string(a) == s) return a;
    throw UnsupportedArch(std::string(s));
}

CompGraph make_fixture(Arch arch, int input_hw, int bpe) {
    if (input_hw < 32) throw UnsupportedArch("input_hw must be >= 32");
    switch (arch) {
        case Arch::vgg16: return build_vgg16(input_hw, bpe);
        case Arch::resnet18: return build_resnet(input_hw, bpe, {2, 2, 2, 2}, false);
        case Arch::resnet50: return build_resnet(input_hw, bpe, {3, 4, 6, 3}, true);
        case Arch::mobilenet_v2: return build_mobilenet_v2(input_hw, bpe);
        case Arch::squeezenet: return build_squeezenet(input_hw, bpe);
        case Arch::se_branch_toy: return build_se_branch_toy(input_hw, bpe);
    }
    throw UnsupportedArch("bad arch enum");
}

std::string fixture_name(Arch arch, int input_hw) {
    return std::string(to_string(arch)) + "@" + std::to_string(input_hw);
}

CompGraph fixture_from_name(const std::string& name, int bpe) {
    size_t at = name.find('@');
    if (at == std::string::npos) throw UnsupportedArch("fixture name must be <arch>@<hw>");
    Arch a = arch_from_string(name.substr(0, at));
    int hw = 0;
    auto rest = name.substr(at + 1);
    auto [p, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), hw);
    if (ec != std::errc{} || p != rest.data() + rest.size())
        throw UnsupportedArch("bad resolution in '" + name + "'");
    return make_fixture(a, hw, bpe);
}

} // namespace lfopt
