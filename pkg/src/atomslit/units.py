"""Unit conversions. Everything internal is in atomic units."""

HARTREE_EV = 27.211386245988
AU_TIME_S = 2.4188843265857e-17
AU_TIME_FS = AU_TIME_S * 1e15


def ev_to_au(energy_ev):
    return energy_ev / HARTREE_EV


def au_to_ev(energy_au):
    return energy_au * HARTREE_EV


def fs_to_au(t_fs):
    return t_fs / AU_TIME_FS


def au_to_fs(t_au):
    return t_au * AU_TIME_FS
