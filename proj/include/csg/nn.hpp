#ifndef CSG_NN_HPP
#define CSG_NN_HPP

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "csg/rng.hpp"

// Minimal dense/conv/GRU layer kit with reverse-mode gradients, double
// precision throughout. Parameters live in one flat vector; each layer holds
// offsets into it. Gradient buffers share the same layout.
namespace csg::nn {

using Vec = std::vector<double>;

struct ParamBlock {
    std::size_t offset = 0;
    std::size_t size = 0;
};

class ParamRegistry {
public:
    ParamBlock add(std::size_t n) {
        ParamBlock blk{total_, n};
        total_ += n;
        return blk;
    }
    std::size_t total() const { return total_; }

private:
    std::size_t total_ = 0;
};

// y = W x + b
struct Dense {
    int in = 0, out = 0;
    ParamBlock w, b;

    void init(ParamRegistry& reg, int in_width, int out_width);
    void init_params(double* params, Rng& rng) const;
    void forward(const double* params, const double* x, double* y) const;
    // Accumulates into grads; writes dx when non-null.
    void backward(const double* params, const double* x, const double* dy,
                  double* grads, double* dx) const;
};

// 3^rank kernel, stride 2, zero padding 1; activations are channel-major
// ([ch][spatial], row-major spatial). Output spatial extent is ceil(in/2).
struct Conv {
    int rank = 2;
    std::array<int, 3> in_sp = {1, 1, 1};
    std::array<int, 3> out_sp = {1, 1, 1};
    int in_ch = 0, out_ch = 0;
    ParamBlock w, b;

    void init(ParamRegistry& reg, int rank_, std::array<int, 3> in_spatial,
              int in_channels, int out_channels);
    void init_params(double* params, Rng& rng) const;

    std::size_t in_spatial_size() const;
    std::size_t out_spatial_size() const;
    std::size_t in_size() const { return in_spatial_size() * std::size_t(in_ch); }
    std::size_t out_size() const { return out_spatial_size() * std::size_t(out_ch); }

    void forward(const double* params, const double* x, double* y) const;
    void backward(const double* params, const double* x, const double* dy,
                  double* grads, double* dx) const;

private:
    int kernel_size() const;
    void build_cols(const double* x, double* cols) const;
};

// Gated recurrent unit; gate blocks stacked [r; z; n].
struct Gru {
    int in = 0, hid = 0;
    ParamBlock w, u, b;

    struct Cache {
        Vec x, hprev, r, z, n, gh_n;
    };

    void init(ParamRegistry& reg, int in_width, int hidden_width);
    void init_params(double* params, Rng& rng) const;
    void forward(const double* params, const double* x, const double* hprev, double* h,
                 Cache* cache) const;
    // dh is the loss gradient at the step output; dhprev is accumulated.
    void backward(const double* params, const Cache& cache, const double* dh,
                  double* grads, double* dx, double* dhprev) const;
};

struct Embedding {
    int rows = 0, width = 0;
    ParamBlock w;

    void init(ParamRegistry& reg, int row_count, int embed_width);
    void init_params(double* params, Rng& rng) const;
    const double* row(const double* params, int index) const;
    void backward(int index, const double* dvec, double* grads) const;
};

inline void relu(double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] < 0) x[i] = 0;
}

// dy masked by the post-activation values.
inline void relu_backward(const double* y, double* dy, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (y[i] <= 0) dy[i] = 0;
}

void softmax(const double* logits, double* probs, std::size_t n);

// Inverted dropout; fills mask with 0 or 1/(1-rate) and scales x in place.
void dropout_forward(double* x, double* mask, std::size_t n, double rate, Rng& rng);

double global_norm(const Vec& v);
void clip_by_global_norm(Vec& v, double max_norm);

}  // namespace csg::nn

#endif
