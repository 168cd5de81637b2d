#pragma once
// Cached uniformization data over a quadrature node set.
//
// Every integral we form over the punctured sphere -- the regularized energy,
// Petersson pairings, metric grams -- consumes the developing map at the same
// nodes.  Evaluating the map is an ODE transport, so we sweep the node list
// once in its stored order (consecutive nodes are close together, keeping the
// transports short) and keep the per-node records for all downstream
// consumers.

#include "moduli/develop.hpp"
#include "moduli/quadrature.hpp"

#include <algorithm>
#include <utility>
#include <vector>

namespace moduli {

struct SurfaceData {
    // One record per quadrature node, parallel to DomainQuadrature::nodes().
    std::vector<DevelopingMap::Eval> evals;

    // Wronskian drift of the transport after the full sweep.  Stays near
    // machine precision through the bounded regions and only grows on the far
    // exterior rings, where the hyperbolic density suppresses everything.
    double drift = 0.0;

    static SurfaceData build(const FuchsianGroupRep& grp, const DomainQuadrature& quad,
                             const TransportOptions& topt = {}) {
        DevelopingMap dev(grp, topt);
        SurfaceData sd;
        sd.evals.resize(quad.nodes().size());
        // Restart the transport at every region boundary.  A ring region
        // winds a full circuit around its puncture, so a single continued
        // branch would pick up one deep group translation per ring and the
        // half-plane image would collapse onto the real axis; per-region
        // restarts keep every branch a bounded number of windings from the
        // base frame.  The evaluated density and its derivatives are
        // branch-independent, so the records are unaffected.
        for (const QuadRegion& reg : quad.regions()) {
            dev.reset();
            for (size_t k = reg.first; k < reg.first + reg.count; ++k)
                sd.evals[k] = dev.eval(quad.nodes()[k].w);
            sd.drift = std::max(sd.drift, dev.wronskian_drift());
        }
        return sd;
    }
};

}  // namespace moduli
