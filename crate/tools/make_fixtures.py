#!/usr/bin/env python3
"""Generates the checked-in WFDB fixture tree and its reference dumps.

This is an independent implementation of WFDB format-16 encoding (plain
struct packing, no shared code with the Rust crate). The fixture files it
writes are the ground truth the Rust parser is tested against:

  testdata/ptb-mini/            3 records, 2 patients, 15 leads @ 1000 Hz
  testdata/reference/*.dump.txt first 1000 samples per lead as ADC + mV

Deterministic: rerunning reproduces identical bytes.
"""

import os
import struct

import numpy as np

ROOT = os.path.join(os.path.dirname(__file__), "..", "testdata")
LEADS = ["i", "ii", "iii", "avr", "avl", "avf",
         "v1", "v2", "v3", "v4", "v5", "v6", "vx", "vy", "vz"]
FS = 1000


def beat(t, mi, rng_amp):
    """ECG-ish beat morphology at t seconds past beat onset."""
    def g(center, sigma):
        return np.exp(-0.5 * ((t - center) / sigma) ** 2)

    v = 0.1 * g(0.09, 0.022)          # P
    v -= 0.14 * g(0.175, 0.011)       # Q
    v += 1.1 * g(0.205, 0.013)        # R
    v -= 0.22 * g(0.235, 0.011)       # S
    if mi:
        v += 0.28 * g(0.33, 0.055)    # ST elevation
        v += 0.08 * rng_amp * g(0.46, 0.045)
    else:
        v += rng_amp * g(0.46, 0.045)  # T
    return v


def synth_record(rng, seconds, mi):
    n = int(round(seconds * FS))
    period = rng.uniform(0.75, 0.92)
    phase = rng.uniform(0.0, period)
    t_amp = rng.uniform(0.25, 0.4)
    t = np.arange(n) / FS + phase
    channels = []
    for ix in range(len(LEADS)):
        scale = 0.55 + 0.05 * ix + rng.uniform(-0.04, 0.04)
        mv = scale * beat(np.mod(t + 0.002 * ix, period), mi, t_amp)
        mv += rng.uniform(0.02, 0.06) * np.sin(2 * np.pi * rng.uniform(0.1, 0.3) * t)
        mv += rng.normal(0.0, 0.015, n)
        channels.append(mv)
    return channels


def to_adc(mv, gain, adc_zero):
    adc = np.rint(np.asarray(mv) * gain + adc_zero)
    return np.clip(adc, -32768, 32767).astype(np.int64)


def checksum16(adc):
    return int(np.int16(np.sum(adc.astype(np.uint16), dtype=np.uint64) & 0xFFFF))


def write_record(patient_dir, name, channels_adc, gains, zeros, comments):
    n = len(channels_adc[0])
    lines = [f"{name} {len(LEADS)} {FS} {n}"]
    for lead, adc, gain, zero in zip(LEADS, channels_adc, gains, zeros):
        lines.append(
            f"{name}.dat 16 {gain:g} 16 {zero} {adc[0]} {checksum16(adc)} 0 {lead}"
        )
    lines += [f"# {c}" for c in comments]
    with open(os.path.join(patient_dir, name + ".hea"), "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")

    frames = np.stack(channels_adc, axis=1).astype(np.int64)  # [n, nsig]
    with open(os.path.join(patient_dir, name + ".dat"), "wb") as f:
        f.write(struct.pack(f"<{frames.size}h", *frames.reshape(-1).tolist()))


def write_dump(path, name, channels_adc, gains, zeros, first=1000):
    with open(path, "w", newline="\n") as f:
        f.write(f"record {name} first {first}\n")
        for lead, adc, gain, zero in zip(LEADS, channels_adc, gains, zeros):
            head = adc[:first]
            mv = (head - zero) / float(gain)
            f.write(f"lead {lead} gain {gain:g} zero {zero}\n")
            f.write("adc " + " ".join(str(int(v)) for v in head) + "\n")
            f.write("mv " + " ".join(repr(float(v)) for v in mv) + "\n")


def main():
    os.makedirs(os.path.join(ROOT, "reference"), exist_ok=True)
    rng = np.random.default_rng(20240810)

    records = [
        # (patient, name, seconds, mi, gains, zeros, comments)
        ("patient001", "s0010_re", 11.5, True,
         [2000] * 15, [0] * 15,
         ["age: 81", "sex: female", "ECG date: 01/10/1990", "Diagnose:",
          "Reason for admission: Myocardial infarction",
          "Acute infarction (localization): infero-lateral"]),
        ("patient001", "s0014lre", 12.25, True,
         [2000] * 15, [0] * 15,
         ["age: 81", "sex: female", "ECG date: 29/10/1990",
          "Reason for admission: Myocardial infarction"]),
        # Frank leads at a different gain to exercise per-signal scaling.
        ("patient002", "s0021are", 10.75, False,
         [2000] * 12 + [1000] * 3, [0] * 15,
         ["age: 54", "sex: male",
          "Reason for admission: Healthy control"]),
    ]

    dumped = {"s0010_re", "s0021are"}
    manifest = []
    for patient, name, seconds, mi, gains, zeros, comments in records:
        pdir = os.path.join(ROOT, "ptb-mini", patient)
        os.makedirs(pdir, exist_ok=True)
        channels_mv = synth_record(rng, seconds, mi)
        channels_adc = [to_adc(mv, g, z) for mv, g, z in zip(channels_mv, gains, zeros)]
        write_record(pdir, name, channels_adc, gains, zeros, comments)
        manifest.append(f"{patient}/{name}")
        if name in dumped:
            write_dump(os.path.join(ROOT, "reference", name + ".dump.txt"),
                       name, channels_adc, gains, zeros)
        print(f"wrote {patient}/{name}: {len(channels_adc[0])} samples, mi={mi}")

    with open(os.path.join(ROOT, "ptb-mini", "RECORDS"), "w", newline="\n") as f:
        f.write("\n".join(manifest) + "\n")


if __name__ == "__main__":
    main()
