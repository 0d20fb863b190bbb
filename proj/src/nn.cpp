#include "csg/nn.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace csg::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<Eigen::VectorXd>;
using CMapVec = Eigen::Map<const Eigen::VectorXd>;

void xavier_uniform(double* dst, std::size_t n, int fan_in, int fan_out, Rng& rng) {
    const double s = std::sqrt(6.0 / double(fan_in + fan_out));
    for (std::size_t i = 0; i < n; ++i) dst[i] = (2.0 * rng.uniform_real() - 1.0) * s;
}

}  // namespace

void Dense::init(ParamRegistry& reg, int in_width, int out_width) {
    in = in_width;
    out = out_width;
    w = reg.add(std::size_t(in) * out);
    b = reg.add(std::size_t(out));
}

void Dense::init_params(double* params, Rng& rng) const {
    xavier_uniform(params + w.offset, w.size, in, out, rng);
    for (std::size_t i = 0; i < b.size; ++i) params[b.offset + i] = 0;
}

void Dense::forward(const double* params, const double* x, double* y) const {
    CMapMat W(params + w.offset, out, in);
    CMapVec xv(x, in), bv(params + b.offset, out);
    MapVec yv(y, out);
    yv.noalias() = W * xv + bv;
}

void Dense::backward(const double* params, const double* x, const double* dy,
                     double* grads, double* dx) const {
    CMapMat W(params + w.offset, out, in);
    CMapVec xv(x, in), dyv(dy, out);
    MapMat dW(grads + w.offset, out, in);
    MapVec db(grads + b.offset, out);
    dW.noalias() += dyv * xv.transpose();
    db.noalias() += dyv;
    if (dx) {
        MapVec dxv(dx, in);
        dxv.noalias() = W.transpose() * dyv;
    }
}

int Conv::kernel_size() const { return rank == 2 ? 9 : 27; }

std::size_t Conv::in_spatial_size() const {
    std::size_t s = 1;
    for (int a = 0; a < rank; ++a) s *= std::size_t(in_sp[std::size_t(a)]);
    return s;
}

std::size_t Conv::out_spatial_size() const {
    std::size_t s = 1;
    for (int a = 0; a < rank; ++a) s *= std::size_t(out_sp[std::size_t(a)]);
    return s;
}

void Conv::init(ParamRegistry& reg, int rank_, std::array<int, 3> in_spatial,
                int in_channels, int out_channels) {
    rank = rank_;
    in_sp = in_spatial;
    out_sp = {1, 1, 1};
    for (int a = 0; a < rank; ++a)
        out_sp[std::size_t(a)] = (in_sp[std::size_t(a)] + 1) / 2;
    in_ch = in_channels;
    out_ch = out_channels;
    w = reg.add(std::size_t(out_ch) * in_ch * kernel_size());
    b = reg.add(std::size_t(out_ch));
}

void Conv::init_params(double* params, Rng& rng) const {
    xavier_uniform(params + w.offset, w.size, in_ch * kernel_size(),
                   out_ch * kernel_size(), rng);
    for (std::size_t i = 0; i < b.size; ++i) params[b.offset + i] = 0;
}

// cols layout: (out positions) x (in_ch * kernel), matching weight rows
// (out_ch) x (in_ch * kernel).
void Conv::build_cols(const double* x, double* cols) const {
    const std::size_t in_plane = in_spatial_size();
    const int K = kernel_size();
    const int w0 = in_sp[0], w1 = in_sp[1], w2 = in_sp[2];
    std::size_t pos = 0;
    if (rank == 2) {
        for (int oa = 0; oa < out_sp[0]; ++oa)
            for (int ob = 0; ob < out_sp[1]; ++ob, ++pos) {
                double* dst = cols + pos * std::size_t(in_ch) * K;
                for (int c = 0; c < in_ch; ++c) {
                    const double* plane = x + std::size_t(c) * in_plane;
                    for (int ka = 0; ka < 3; ++ka)
                        for (int kb = 0; kb < 3; ++kb) {
                            const int ia = 2 * oa + ka - 1, ib = 2 * ob + kb - 1;
                            *dst++ = (ia < 0 || ib < 0 || ia >= w0 || ib >= w1)
                                         ? 0.0
                                         : plane[std::size_t(ia) * w1 + ib];
                        }
                }
            }
    } else {
        for (int oa = 0; oa < out_sp[0]; ++oa)
            for (int ob = 0; ob < out_sp[1]; ++ob)
                for (int oc = 0; oc < out_sp[2]; ++oc, ++pos) {
                    double* dst = cols + pos * std::size_t(in_ch) * K;
                    for (int c = 0; c < in_ch; ++c) {
                        const double* vol = x + std::size_t(c) * in_plane;
                        for (int ka = 0; ka < 3; ++ka)
                            for (int kb = 0; kb < 3; ++kb)
                                for (int kc = 0; kc < 3; ++kc) {
                                    const int ia = 2 * oa + ka - 1, ib = 2 * ob + kb - 1,
                                              ic = 2 * oc + kc - 1;
                                    *dst++ = (ia < 0 || ib < 0 || ic < 0 || ia >= w0 ||
                                              ib >= w1 || ic >= w2)
                                                 ? 0.0
                                                 : vol[(std::size_t(ia) * w1 + ib) * w2 + ic];
                                }
                    }
                }
    }
}

void Conv::forward(const double* params, const double* x, double* y) const {
    const std::size_t P = out_spatial_size();
    const int K = kernel_size();
    Vec cols(P * std::size_t(in_ch) * K);
    build_cols(x, cols.data());
    CMapMat C(cols.data(), Eigen::Index(P), in_ch * K);
    CMapMat W(params + w.offset, out_ch, in_ch * K);
    MapMat Y(y, out_ch, Eigen::Index(P));  // channel-major output
    Y.noalias() = W * C.transpose();
    CMapVec bv(params + b.offset, out_ch);
    Y.colwise() += bv;
}

void Conv::backward(const double* params, const double* x, const double* dy,
                    double* grads, double* dx) const {
    const std::size_t P = out_spatial_size();
    const int K = kernel_size();
    Vec cols(P * std::size_t(in_ch) * K);
    build_cols(x, cols.data());
    CMapMat C(cols.data(), Eigen::Index(P), in_ch * K);
    CMapMat dY(dy, out_ch, Eigen::Index(P));
    MapMat dW(grads + w.offset, out_ch, in_ch * K);
    MapVec db(grads + b.offset, out_ch);
    dW.noalias() += dY * C;
    db.noalias() += dY.rowwise().sum();

    if (!dx) return;
    CMapMat W(params + w.offset, out_ch, in_ch * K);
    RowMat dC = dY.transpose() * W;  // (P) x (in_ch*K)

    // scatter-add the column gradients back to input cells
    const std::size_t in_plane = in_spatial_size();
    for (std::size_t i = 0; i < in_plane * std::size_t(in_ch); ++i) dx[i] = 0;
    const int w0 = in_sp[0], w1 = in_sp[1], w2 = in_sp[2];
    std::size_t pos = 0;
    if (rank == 2) {
        for (int oa = 0; oa < out_sp[0]; ++oa)
            for (int ob = 0; ob < out_sp[1]; ++ob, ++pos) {
                const double* src = dC.data() + pos * std::size_t(in_ch) * K;
                for (int c = 0; c < in_ch; ++c) {
                    double* plane = dx + std::size_t(c) * in_plane;
                    for (int ka = 0; ka < 3; ++ka)
                        for (int kb = 0; kb < 3; ++kb) {
                            const int ia = 2 * oa + ka - 1, ib = 2 * ob + kb - 1;
                            const double g = *src++;
                            if (ia >= 0 && ib >= 0 && ia < w0 && ib < w1)
                                plane[std::size_t(ia) * w1 + ib] += g;
                        }
                }
            }
    } else {
        for (int oa = 0; oa < out_sp[0]; ++oa)
            for (int ob = 0; ob < out_sp[1]; ++ob)
                for (int oc = 0; oc < out_sp[2]; ++oc, ++pos) {
                    const double* src = dC.data() + pos * std::size_t(in_ch) * K;
                    for (int c = 0; c < in_ch; ++c) {
                        double* vol = dx + std::size_t(c) * in_plane;
                        for (int ka = 0; ka < 3; ++ka)
                            for (int kb = 0; kb < 3; ++kb)
                                for (int kc = 0; kc < 3; ++kc) {
                                    const int ia = 2 * oa + ka - 1, ib = 2 * ob + kb - 1,
                                              ic = 2 * oc + kc - 1;
                                    const double g = *src++;
                                    if (ia >= 0 && ib >= 0 && ic >= 0 && ia < w0 &&
                                        ib < w1 && ic < w2)
                                        vol[(std::size_t(ia) * w1 + ib) * w2 + ic] += g;
                                }
                    }
                }
    }
}

void Gru::init(ParamRegistry& reg, int in_width, int hidden_width) {
    in = in_width;
    hid = hidden_width;
    w = reg.add(std::size_t(3) * hid * in);
    u = reg.add(std::size_t(3) * hid * hid);
    b = reg.add(std::size_t(3) * hid);
}

void Gru::init_params(double* params, Rng& rng) const {
    xavier_uniform(params + w.offset, w.size, in, hid, rng);
    xavier_uniform(params + u.offset, u.size, hid, hid, rng);
    for (std::size_t i = 0; i < b.size; ++i) params[b.offset + i] = 0;
}

void Gru::forward(const double* params, const double* x, const double* hprev, double* h,
                  Cache* cache) const {
    CMapMat W(params + w.offset, 3 * hid, in);
    CMapMat U(params + u.offset, 3 * hid, hid);
    CMapVec bv(params + b.offset, 3 * hid);
    CMapVec xv(x, in), hp(hprev, hid);

    Eigen::VectorXd gx = W * xv + bv;
    Eigen::VectorXd gh = U * hp;

    Eigen::VectorXd r(hid), z(hid), n(hid);
    for (int i = 0; i < hid; ++i) {
        r[i] = 1.0 / (1.0 + std::exp(-(gx[i] + gh[i])));
        z[i] = 1.0 / (1.0 + std::exp(-(gx[hid + i] + gh[hid + i])));
        n[i] = std::tanh(gx[2 * hid + i] + r[i] * gh[2 * hid + i]);
        h[i] = (1.0 - z[i]) * n[i] + z[i] * hp[i];
    }

    if (cache) {
        cache->x.assign(x, x + in);
        cache->hprev.assign(hprev, hprev + hid);
        cache->r.assign(r.data(), r.data() + hid);
        cache->z.assign(z.data(), z.data() + hid);
        cache->n.assign(n.data(), n.data() + hid);
        cache->gh_n.assign(gh.data() + 2 * hid, gh.data() + 3 * hid);
    }
}

void Gru::backward(const double* params, const Cache& cache, const double* dh,
                   double* grads, double* dx, double* dhprev) const {
    Eigen::VectorXd dgx(3 * hid), dgh(3 * hid);
    for (int i = 0; i < hid; ++i) {
        const double r = cache.r[std::size_t(i)], z = cache.z[std::size_t(i)],
                     n = cache.n[std::size_t(i)];
        const double hp = cache.hprev[std::size_t(i)], ghn = cache.gh_n[std::size_t(i)];
        const double dz = dh[i] * (hp - n);
        const double dn = dh[i] * (1.0 - z);
        const double dan = dn * (1.0 - n * n);
        const double dr = dan * ghn;
        dgx[2 * hid + i] = dan;
        dgh[2 * hid + i] = dan * r;
        dgx[i] = dgh[i] = dr * r * (1.0 - r);
        dgx[hid + i] = dgh[hid + i] = dz * z * (1.0 - z);
    }

    CMapVec xv(cache.x.data(), in), hp(cache.hprev.data(), hid);
    MapMat dW(grads + w.offset, 3 * hid, in);
    MapMat dU(grads + u.offset, 3 * hid, hid);
    MapVec db(grads + b.offset, 3 * hid);
    dW.noalias() += dgx * xv.transpose();
    dU.noalias() += dgh * hp.transpose();
    db.noalias() += dgx;

    CMapMat W(params + w.offset, 3 * hid, in);
    CMapMat U(params + u.offset, 3 * hid, hid);
    if (dx) {
        MapVec dxv(dx, in);
        dxv.noalias() = W.transpose() * dgx;
    }
    MapVec dhp(dhprev, hid);
    dhp.noalias() += U.transpose() * dgh;
    for (int i = 0; i < hid; ++i) dhprev[i] += dh[i] * cache.z[std::size_t(i)];
}

void Embedding::init(ParamRegistry& reg, int row_count, int embed_width) {
    rows = row_count;
    width = embed_width;
    w = reg.add(std::size_t(rows) * width);
}

void Embedding::init_params(double* params, Rng& rng) const {
    for (std::size_t i = 0; i < w.size; ++i)
        params[w.offset + i] = 0.1 * rng.normal();
}

const double* Embedding::row(const double* params, int index) const {
    return params + w.offset + std::size_t(index) * width;
}

void Embedding::backward(int index, const double* dvec, double* grads) const {
    double* dst = grads + w.offset + std::size_t(index) * width;
    for (int i = 0; i < width; ++i) dst[i] += dvec[i];
}

void softmax(const double* logits, double* probs, std::size_t n) {
    double mx = logits[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        probs[i] = std::exp(logits[i] - mx);
        sum += probs[i];
    }
    for (std::size_t i = 0; i < n; ++i) probs[i] /= sum;
}

void dropout_forward(double* x, double* mask, std::size_t n, double rate, Rng& rng) {
    const double keep = 1.0 - rate;
    for (std::size_t i = 0; i < n; ++i) {
        mask[i] = rng.uniform_real() < rate ? 0.0 : 1.0 / keep;
        x[i] *= mask[i];
    }
}

double global_norm(const Vec& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

void clip_by_global_norm(Vec& v, double max_norm) {
    const double norm = global_norm(v);
    if (norm > max_norm && norm > 0) {
        const double scale = max_norm / norm;
        for (double& x : v) x *= scale;
    }
}

}  // namespace csg::nn
