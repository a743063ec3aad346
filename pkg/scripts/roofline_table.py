"""Roofline table for the 1D and 2D benchmark shapes on the default machine
(1.2 GHz, 256 MAC PEs, 100 GB/s, doubles)."""

from stencilcgra.roofline import MachineModel, worker_bounds


def show(name, rep):
    print(f"{name}: AI={rep.ai:.4f} flop/B  bw bound={rep.bw_bound_gflops:.1f} GFLOPS  "
          f"roof={rep.roof_gflops:.1f}")
    for w, g in rep.compute_bound_gflops.items():
        if w > max(rep.recommended_w, 8):
            break
        mark = "  <- recommended" if w == rep.recommended_w else ""
        print(f"  w={w:<3d} compute bound {g:7.1f} GFLOPS{mark}")
    print(f"  w_max={rep.w_max}  peak={rep.peak_gflops:.1f} GFLOPS\n")


def main():
    m = MachineModel()
    show("1D n=194400 rx=8", worker_bounds(m, n=194400, rx=8))
    show("2D 960x449 rx=ry=12", worker_bounds(m, nx=960, ny=449, rx=12, ry=12))


if __name__ == "__main__":
    main()
