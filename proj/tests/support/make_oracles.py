#!/usr/bin/env python3
"""Regenerates tests/support/oracles.inc from 50-digit mpmath evaluations.

Every value is computed here independently of the C++ library; the C++
tests compare against the frozen output.
"""
import mpmath as mp

mp.mp.dps = 50


def d(x):
    return mp.mpf(float(x))  # the exact binary value of the double input


def lit(x):
    return repr(float(x))


out = []


def emit(name, value):
    out.append(f"inline constexpr double {name} = {lit(value)};")


def emit_array(name, values):
    body = ",\n    ".join(lit(v) for v in values)
    out.append(f"inline constexpr double {name}[] = {{\n    {body}}};")


# Calibration at the reference settings.
mu, clip, size = d(0.0046), d(1.0), mp.mpf(1470)
dt = 2 * mu * clip / size
emit("kSensitivityRef", dt)
dt_d = d(float(dt))
emit("kGaussianSigmaRef", dt_d * mp.sqrt(2 * mp.log(mp.mpf("1.25") / d(1e-5))) / d(0.5))
emit("kLaplaceScaleRef", dt_d / d(0.5))
q = d(1024.0 / 1470.0)
emit("kMaSigmaRef", dt_d * mp.sqrt(2 * q * 1000 * mp.log(1 / d(1e-5))) / d(0.5))

# Composition at eps=0.5, delta=1e-5, N=3, T=1000, slack=1e-5.
k = mp.mpf(3000)
eps, delta, slack = d(0.5), d(1e-5), d(1e-5)
delta_bar = k * delta + slack
emit("kAdvancedDeltaBar", delta_bar)
emit("kAdvancedEpsBar", eps * mp.sqrt(2 * k * mp.log(1 / d(float(delta_bar)))) + k * eps * mp.expm1(eps))
emit("kNaiveEpsBar", k * eps)
emit("kNaiveDeltaBar", k * delta)

# Forward pass of a 2-2-2 ReLU network, z = x W + b.
W1 = [[d(0.5), d(-0.25)], [d(0.75), d(0.1)]]
b1 = [d(0.1), d(-0.2)]
W2 = [[d(1.0), d(-1.0)], [d(0.5), d(0.25)]]
b2 = [d(0.0), d(0.3)]
x = [d(1.0), d(2.0)]
h = [max(mp.mpf(0), sum(x[i] * W1[i][j] for i in range(2)) + b1[j]) for j in range(2)]
z = [sum(h[j] * W2[j][o] for j in range(2)) + b2[o] for o in range(2)]
m = max(z)
e = [mp.exp(v - m) for v in z]
emit_array("kForward222", [v / sum(e) for v in e])


# One local round of a 21-2-5 ReLU network on one sample, no noise.
def w1(i, j):
    return ((i * 7 + j * 3) % 11 - 5) / 20.0


def w2(j, o):
    return ((j * 5 + o * 2) % 7 - 3) / 10.0


IN, HID, OUT = 21, 2, 5
theta = []
for i in range(IN):
    for j in range(HID):
        theta.append(w1(i, j))
theta += [0.05, -0.1]
for j in range(HID):
    for o in range(OUT):
        theta.append(w2(j, o))
theta += [0.01 * o for o in range(OUT)]
emit_array("kTraceTheta", theta)

xs = [((i % 5) + 1) / 8.0 for i in range(IN)]
label = 3
lr, clip_norm = 0.5, 0.05
emit_array("kTraceSample", xs)

T = [d(v) for v in theta]
X = [d(v) for v in xs]
W1m = [[T[i * HID + j] for j in range(HID)] for i in range(IN)]
B1 = T[IN * HID:IN * HID + HID]
off = IN * HID + HID
W2m = [[T[off + j * OUT + o] for o in range(OUT)] for j in range(HID)]
B2 = T[off + HID * OUT:]
pre = [sum(X[i] * W1m[i][j] for i in range(IN)) + B1[j] for j in range(HID)]
assert all(abs(p) > mp.mpf("1e-6") for p in pre)
H = [max(mp.mpf(0), p) for p in pre]
Z = [sum(H[j] * W2m[j][o] for j in range(HID)) + B2[o] for o in range(OUT)]
mz = max(Z)
lse = mz + mp.log(sum(mp.exp(v - mz) for v in Z))
emit("kTraceLoss", lse - Z[label])
P = [mp.exp(v - lse) for v in Z]
dZ = [P[o] - (1 if o == label else 0) for o in range(OUT)]
gW2 = [[H[j] * dZ[o] for o in range(OUT)] for j in range(HID)]
dH = [sum(dZ[o] * W2m[j][o] for o in range(OUT)) * (1 if pre[j] > 0 else 0) for j in range(HID)]
gW1 = [[X[i] * dH[j] for j in range(HID)] for i in range(IN)]
grad = [gW1[i][j] for i in range(IN) for j in range(HID)] + dH
grad += [gW2[j][o] for j in range(HID) for o in range(OUT)] + dZ
delta_vec = [-d(lr) * g for g in grad]
norm = mp.sqrt(sum(v * v for v in delta_vec))
assert norm > clip_norm
clipped = [v * d(clip_norm) / norm for v in delta_vec]
emit_array("kTraceUpdated", [T[i] + clipped[i] for i in range(len(T))])

with open(__file__.replace("make_oracles.py", "oracles.inc"), "w") as f:
    f.write("// Generated by make_oracles.py; do not edit.\n")
    f.write("#pragma once\n\nnamespace oracle {\n\n")
    f.write("\n".join(out))
    f.write("\n\n}  // namespace oracle\n")
