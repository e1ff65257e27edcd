"""Bundled example sequences: GE-EPI, spin echo, bSSFP, and a time-of-flight pair.

Each builder returns a SequenceDoc parameterized through global variables, so
high-level settings (matrix size, FOV, TE, TR) propagate through the block
expressions.  All timing bookkeeping (ramp areas, echo centering) is written
out in the variable definitions; scanners are part of the documents, and the
`slew` variable mirrors the scanner's slew limit so ramp times are
expressible.
"""

from __future__ import annotations

import dataclasses

from mrseq.model import (
    Delay,
    EpiAcq,
    Gradient,
    GroupDef,
    GroupRef,
    Readout,
    RfPulse,
    Scanner,
    SequenceDoc,
)

__all__ = [
    "ge_epi_doc",
    "spin_echo_doc",
    "bssfp_doc",
    "tof_epi_doc",
    "tof_bssfp_doc",
    "EXAMPLES",
]


def ge_epi_doc(n: int = 100, fov: float = 0.24, thickness: float = 5e-3,
               freq_offset: float = -20e3, slab: bool = True) -> SequenceDoc:
    """Single-shot GE-EPI: sinc excitation with slice gradient, slice rephaser,
    a settling delay, and an n x n EPI acquisition.

    Variables ``A`` (slice-gradient amplitude) and ``N`` (matrix size) control
    the z gradients and the EPI block.  With ``slab`` off the excitation is a
    short hard pulse (useful for planar phantoms).
    """
    scanner = Scanner(b0=3.0, max_rf_amp=1e-4, max_grad=45e-3, max_slew=200.0)
    variables = {
        "N": str(n),
        "FOV": repr(fov),
        "slew": repr(scanner.max_slew),
        "T_rf": "0.001",
        "lobes": "3",
        "thickness": repr(thickness),
        "f_off": repr(float(freq_offset)),
        # slice-select amplitude from the sinc time-bandwidth convention
        "A": "(lobes + 1) / T_rf / (gamma * thickness)",
    }
    if slab:
        ex_block = RfPulse(shape="sinc", flip_angle="90", duration="T_rf",
                           freq_offset="f_off", sinc_lobes="lobes",
                           slice_grad_axis="z", slice_grad_amp="A")
        # rephase half the slice gradient including its ramps
        rephase = Gradient(gz="-A", flat_duration="(T_rf - A/slew)/2",
                           rise_time="A/slew")
        blocks = [ex_block, rephase, Delay(duration="0.001")]
    else:
        variables["T_rf"] = "0.0001"
        blocks = [RfPulse(shape="hard", flip_angle="90", duration="T_rf"),
                  Delay(duration="0.001")]
    blocks.append(EpiAcq(n_lines="N", samples_per_line="N", fov="FOV",
                         read_axis="x", phase_axis="y"))
    return SequenceDoc(
        blocks=blocks,
        variables=variables,
        scanner=scanner,
        description=f"Single-shot GE-EPI, {n}x{n} over {fov*100:.0f} cm FOV.",
    )


def spin_echo_doc(n: int = 100, fov: float = 0.2, te: float = 30e-3, tr: float = 0.5,
                  slice_selective: bool = True, thickness: float = 5e-3,
                  readout_duration: float | None = None, n_dummy: int = 0,
                  enc_time: float = 1e-3, enc_rise: float = 2e-4,
                  crush_time: float = 5e-4, rf180_duration: float = 2e-4) -> SequenceDoc:
    """Spin echo: a TR group repeated ``N_matrix`` times.

    Per repetition: 90deg pulse, a combined dephaser (read prephase, phase
    encode stepped by the loop counter, slice rephase), a crusher pair
    straddling a hard 180deg pulse, the readout, and delays that pin TE and
    TR.  ``n_dummy`` prepends TRs without acquisition to settle the steady
    state (their readout is replaced by a matched delay).
    """
    scanner = Scanner(b0=3.0, max_rf_amp=2e-4, max_grad=45e-3, max_slew=200.0)
    tau = readout_duration if readout_duration is not None else n * 8e-6
    variables = {
        "N_matrix": str(n),
        "FOV": repr(fov),
        "TE": repr(te),
        "TR": repr(tr),
        "slew": repr(scanner.max_slew),
        "T_rf": "0.0005" if slice_selective else "0.0001",
        "T_rf180": repr(rf180_duration),
        "lobes": "3",
        "thickness": repr(thickness),
        "tau": repr(tau),
        "t_enc": repr(enc_time),
        "t_r_enc": repr(enc_rise),
        "t_crush": repr(crush_time),
        "Gc": "0.004",
        "G_read": "N_matrix / (gamma * FOV * tau)",
        "t_r_read": "G_read / slew",
        "A": "(lobes + 1) / T_rf / (gamma * thickness)" if slice_selective else "0",
        "t_r_ss": "A / slew",
        # areas -> amplitudes over the shared encode timing
        "amp_read_pre": "G_read * (tau + t_r_read) / 2 / (t_enc + t_r_enc)",
        "amp_pe": "(N_matrix/2 - rep_TR) / (gamma * FOV) / (t_enc + t_r_enc)",
        "amp_ss_reph": "-A * (T_rf + t_r_ss) / 2 / (t_enc + t_r_enc)",
        # echo centering; readout samples sit at (k+1/2)*tau/N on the flat top
        "d1": "TE/2 - T_rf/2 - t_r_ss - 2*t_r_enc - t_enc - 2*t_r_enc - t_crush - T_rf180/2",
        "d2": "TE/2 - T_rf180/2 - 2*t_r_enc - t_crush - t_r_read - tau/2",
        "d_tr": "TR - t_r_ss - T_rf/2 - TE - tau/2 - t_r_read",
    }
    if slice_selective:
        ex90 = RfPulse(shape="sinc", flip_angle="90", duration="T_rf",
                       sinc_lobes="lobes", slice_grad_axis="z", slice_grad_amp="A")
    else:
        ex90 = RfPulse(shape="hard", flip_angle="90", duration="T_rf")
    tr_blocks = (
        ex90,
        # read prephase + phase encode + slice rephase, all before the 180
        Gradient(gx="amp_read_pre", gy="-amp_pe", gz="amp_ss_reph",
                 flat_duration="t_enc", rise_time="t_r_enc"),
        Delay(duration="d1"),
        Gradient(gx="Gc", gz="Gc", flat_duration="t_crush", rise_time="t_r_enc"),
        RfPulse(shape="hard", flip_angle="180", duration="T_rf180"),
        Gradient(gx="Gc", gz="Gc", flat_duration="t_crush", rise_time="t_r_enc"),
        Delay(duration="d2"),
        Readout(samples="N_matrix", duration="tau", read_grad_axis="x",
                read_grad_amp="G_read", line_tag="rep_TR"),
        Delay(duration="d_tr"),
    )
    groups = [GroupDef("TR", tr_blocks)]
    blocks: list = []
    if n_dummy > 0:
        # dummy TRs: no acquisition, no phase encode (its counter is TR-scoped)
        dummy_blocks = []
        for b in tr_blocks:
            if isinstance(b, Readout):
                dummy_blocks.append(Delay(duration="tau + 2*t_r_read"))
            elif isinstance(b, Gradient) and b.gy != "0":
                dummy_blocks.append(dataclasses.replace(b, gy="0"))
            else:
                dummy_blocks.append(b)
        groups.append(GroupDef("PREP", tuple(dummy_blocks)))
        blocks.append(GroupRef(group="PREP", repetitions=str(n_dummy)))
    blocks.append(GroupRef(group="TR", repetitions="N_matrix"))
    return SequenceDoc(
        blocks=blocks,
        groups=groups,
        variables=variables,
        scanner=scanner,
        description=f"Spin echo {n}x{n}, TE {te*1e3:.0f} ms, TR {tr*1e3:.0f} ms.",
    )


def bssfp_doc(n: int = 32, fov: float = 0.2, tr_half: float = 4e-3, flip: float = 50.0,
              n_prep: int = 20, slab_thickness: float | None = None) -> SequenceDoc:
    """Balanced SSFP acquiring one line per phase-cycle pair.

    RF phase alternates 0/180 every excitation; only the 0-phase half of each
    pair acquires, so the stored lines carry a constant sign.  All gradient
    moments are nulled over every TR.  ``n_prep`` pairs of dummy TRs approach
    the steady state before the acquisition group runs.
    """
    scanner = Scanner(b0=3.0, max_rf_amp=1.5e-4, max_grad=45e-3, max_slew=200.0)
    tau = n * 10e-6
    slab = slab_thickness is not None
    variables = {
        "N": str(n),
        "FOV": repr(fov),
        "slew": repr(scanner.max_slew),
        "flip": repr(float(flip)),
        "T_rf": "0.0004" if slab else "0.0002",
        "lobes": "2",
        "thickness": repr(slab_thickness if slab else 0.0),
        "tau": repr(tau),
        "t_enc": "0.0004",
        "t_r_enc": "0.00012",
        "TR_half": repr(tr_half),
        "G_read": "N / (gamma * FOV * tau)",
        "t_r_read": "G_read / slew",
        "A": "(lobes + 1) / T_rf / (gamma * thickness)" if slab else "0",
        "t_r_ss": "A / slew",
        "amp_ss_half": "A * (T_rf + t_r_ss) / 2 / (t_enc + t_r_enc)",
        "amp_read_half": "G_read * (tau + t_r_read) / 2 / (t_enc + t_r_enc)",
        "amp_pe": "(rep_PAIR - N/2) / (gamma * FOV) / (t_enc + t_r_enc)",
        "pad": "TR_half - 3*(t_enc + 2*t_r_enc) - T_rf - 2*t_r_ss - tau - 2*t_r_read",
    }
    if slab:
        def ex(phase: str) -> RfPulse:
            return RfPulse(shape="sinc", flip_angle="flip", duration="T_rf",
                           phase=phase, sinc_lobes="lobes",
                           slice_grad_axis="z", slice_grad_amp="A")
    else:
        def ex(phase: str) -> RfPulse:
            return RfPulse(shape="hard", flip_angle="flip", duration="T_rf", phase=phase)

    def grad(gx="0", gy="0", gz="0") -> Gradient:
        return Gradient(gx=gx, gy=gy, gz=gz, flat_duration="t_enc", rise_time="t_r_enc")

    silent_half = (
        grad(gz="-amp_ss_half"),
        ex("180"),
        grad(gz="-amp_ss_half"),
        Delay(duration="tau + 2*t_r_read"),
        grad(),
        Delay(duration="pad"),
    )
    acquire_half = (
        grad(gz="-amp_ss_half"),
        ex("0"),
        grad(gx="-amp_read_half", gy="amp_pe", gz="-amp_ss_half"),
        Readout(samples="N", duration="tau", read_grad_axis="x",
                read_grad_amp="G_read", line_tag="rep_PAIR"),
        grad(gx="-amp_read_half", gy="-amp_pe"),
        Delay(duration="pad"),
    )
    prep_acquire_half = (
        grad(gz="-amp_ss_half"),
        ex("0"),
        grad(gz="-amp_ss_half"),
        Delay(duration="tau + 2*t_r_read"),
        grad(),
        Delay(duration="pad"),
    )
    groups = [
        GroupDef("PREP", prep_acquire_half + silent_half),
        GroupDef("PAIR", acquire_half + silent_half),
    ]
    blocks = []
    if n_prep > 0:
        blocks.append(GroupRef(group="PREP", repetitions=str(n_prep)))
    blocks.append(GroupRef(group="PAIR", repetitions="N"))
    return SequenceDoc(
        blocks=blocks,
        groups=groups,
        variables=variables,
        scanner=scanner,
        description=(
            f"bSSFP {n}x{n}, TR {2*tr_half*1e3:.1f} ms, flip {flip:.0f} deg, "
            "alternating RF phase with acquisition on the 0-phase TRs."
        ),
    )


def tof_epi_doc(n: int = 32, fov: float = 0.08, thickness: float = 8e-3) -> SequenceDoc:
    """GE-EPI sized for the flow cylinder; slab-selective so inflow matters."""
    doc = ge_epi_doc(n=n, fov=fov, thickness=thickness, freq_offset=0.0, slab=True)
    doc.description = (
        f"Slab-selective GE-EPI {n}x{n} over the flow cylinder; single shot, "
        "so static wall and flowing lumen show equal intensity."
    )
    return doc


def tof_bssfp_doc(n: int = 32, fov: float = 0.08, thickness: float = 8e-3,
                  n_prep: int = 45) -> SequenceDoc:
    """Short-TR slab-selective bSSFP over the flow cylinder (bright-blood inflow).

    The high flip angle saturates static tissue hard while inflowing spins
    still enter at full magnetization, maximizing the inflow contrast.
    """
    doc = bssfp_doc(n=n, fov=fov, tr_half=4e-3, flip=70.0, n_prep=n_prep,
                    slab_thickness=thickness)
    doc.description = (
        f"Slab-selective bSSFP {n}x{n} over the flow cylinder; saturated wall, "
        "fresh inflowing spins brighten the lumen (time-of-flight)."
    )
    return doc


EXAMPLES = {
    "ge_epi": ge_epi_doc,
    "spin_echo": spin_echo_doc,
    "bssfp": bssfp_doc,
    "tof_epi": tof_epi_doc,
    "tof_bssfp": tof_bssfp_doc,
}
