// SPDX-License-Identifier: Apache-2.0
//
// 20-point Gauss-Legendre rule on [-1, 1], positive half; mirror for the
// negative nodes.  Weights are positive, so PSD integrands stay PSD.

#pragma once

#include <array>

namespace mimose::detail {

inline constexpr std::array<double, 10> kGl20Nodes = {
    0.0765265211334973, 0.2277858511416451, 0.3737060887154196,
    0.5108670019508271, 0.6360536807265150, 0.7463319064601508,
    0.8391169718222188, 0.9122344282513259, 0.9639719272779138,
    0.9931285991850949};

inline constexpr std::array<double, 10> kGl20Weights = {
    0.1527533871307258, 0.1491729864726037, 0.1420961093183820,
    0.1316886384491766, 0.1181945319615184, 0.1019301198172404,
    0.0832767415767048, 0.0626720483341091, 0.0406014298003869,
    0.0176140071391521};

}  // namespace mimose::detail
