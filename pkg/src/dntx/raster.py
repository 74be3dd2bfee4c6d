"""Software rasterizer for deferred texture mapping.

Rasterizes per-vertex UV coordinates into a screen-space UV map (z-buffered,
affine barycentric interpolation under the orthographic camera), then samples
feature textures through that map with bilinear filtering.

Conventions, fixed so golden images are portable:
  * pixel centers: pixel (row r, col c) samples NDC point
    x = 2*(c+0.5)/W - 1,  y = 1 - 2*(r+0.5)/H  (top-left origin, y down in
    image space, model y up)
  * uv origin bottom-left; texture arrays are indexed [c, v, u] with the v
    index increasing upward (row 0 is v=0)
  * depth = -z; the smallest depth (largest z, nearest the camera) wins
"""

from dataclasses import dataclass

import numpy as np
import torch


@dataclass(frozen=True)
class Camera:
    """Orthographic camera. NDC = model xy times scale."""

    height: int
    width: int
    scale: float = 1.0

    def __post_init__(self):
        if self.height < 8 or self.width < 8:
            raise ValueError("image size must be at least 8x8")

    def to_screen(self, vertices):
        """Model-space V x 3 -> screen-space (sx, sy, depth), pixel-center units.

        sx equals the column index at a pixel center, sy the row index.
        """
        v = np.asarray(vertices, dtype=np.float64)
        sx = (v[:, 0] * self.scale + 1.0) * 0.5 * self.width - 0.5
        sy = (1.0 - v[:, 1] * self.scale) * 0.5 * self.height - 0.5
        depth = -v[:, 2]
        return np.stack([sx, sy, depth], axis=1)


@dataclass
class UVScreenMap:
    uv: np.ndarray          # H x W x 2, finite where covered
    coverage: np.ndarray    # H x W bool
    depth: np.ndarray       # H x W, +inf where uncovered
    degenerate_triangles: int = 0


def _edge(ax, ay, bx, by, px, py):
    # cross((b - a), (p - a)); shared by rasterize_uv and the test oracle so
    # coverage decisions agree bitwise
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


def rasterize_attributes(vertices, triangles, attrs, camera: Camera):
    """Rasterize per-vertex attributes into screen space with a z-buffer.

    vertices: V x 3 model space, triangles: T x 3 int, attrs: V x D.
    Returns (attr map H x W x D, coverage, depth, degenerate count).
    Zero-area triangles are skipped and counted.
    """
    H, W = camera.height, camera.width
    screen = camera.to_screen(vertices)
    uvs = np.asarray(attrs, dtype=np.float64)
    tris = np.asarray(triangles, dtype=np.int64)

    uv_map = np.zeros((H, W, uvs.shape[1]), dtype=np.float64)
    coverage = np.zeros((H, W), dtype=bool)
    depth_buf = np.full((H, W), np.inf, dtype=np.float64)
    degenerate = 0

    for tri in tris:
        a, b, c = screen[tri[0]], screen[tri[1]], screen[tri[2]]
        area2 = _edge(a[0], a[1], b[0], b[1], c[0], c[1])
        if area2 == 0.0:
            degenerate += 1
            continue
        x_min = max(int(np.ceil(min(a[0], b[0], c[0]))), 0)
        x_max = min(int(np.floor(max(a[0], b[0], c[0]))), W - 1)
        y_min = max(int(np.ceil(min(a[1], b[1], c[1]))), 0)
        y_max = min(int(np.floor(max(a[1], b[1], c[1]))), H - 1)
        if x_min > x_max or y_min > y_max:
            continue
        px, py = np.meshgrid(
            np.arange(x_min, x_max + 1, dtype=np.float64),
            np.arange(y_min, y_max + 1, dtype=np.float64),
        )
        w0 = _edge(b[0], b[1], c[0], c[1], px, py)
        w1 = _edge(c[0], c[1], a[0], a[1], px, py)
        w2 = _edge(a[0], a[1], b[0], b[1], px, py)
        if area2 > 0.0:
            inside = (w0 >= 0.0) & (w1 >= 0.0) & (w2 >= 0.0)
        else:
            inside = (w0 <= 0.0) & (w1 <= 0.0) & (w2 <= 0.0)
        if not inside.any():
            continue
        b0, b1, b2 = w0 / area2, w1 / area2, w2 / area2
        z = b0 * a[2] + b1 * b[2] + b2 * c[2]
        sub = depth_buf[y_min:y_max + 1, x_min:x_max + 1]
        win = inside & (z < sub)
        if not win.any():
            continue
        sub[win] = z[win]
        region_uv = uv_map[y_min:y_max + 1, x_min:x_max + 1]
        for d in range(uvs.shape[1]):
            attr = (b0 * uvs[tri[0], d] + b1 * uvs[tri[1], d]
                    + b2 * uvs[tri[2], d])
            region_uv[win, d] = attr[win]
        coverage[y_min:y_max + 1, x_min:x_max + 1] |= win

    return uv_map, coverage, depth_buf, degenerate


def rasterize_uv(vertices, triangles, uv_coords, camera: Camera) -> UVScreenMap:
    """Rasterize per-vertex UV coordinates into a screen-space UV map."""
    uv_coords = np.asarray(uv_coords, dtype=np.float64)
    if uv_coords.shape[1] != 2:
        raise ValueError("uv_coords must be V x 2")
    uv_map, coverage, depth, degenerate = rasterize_attributes(
        vertices, triangles, uv_coords, camera)
    return UVScreenMap(uv=uv_map, coverage=coverage, depth=depth,
                       degenerate_triangles=degenerate)


class SamplingPlan:
    """Precomputed bilinear gather for one UV map.

    Sampling is linear in the texture and differentiable with respect to the
    texture values (pure gathers and weighted sums).
    """

    def __init__(self, uvmap: UVScreenMap, tex_height: int, tex_width: int):
        H, W = uvmap.coverage.shape
        self.shape = (H, W)
        self.coverage = uvmap.coverage
        ys, xs = np.nonzero(uvmap.coverage)
        uv = uvmap.uv[ys, xs]
        tx = np.clip(uv[:, 0], 0.0, 1.0) * (tex_width - 1)
        ty = np.clip(uv[:, 1], 0.0, 1.0) * (tex_height - 1)
        x0 = np.clip(np.floor(tx).astype(np.int64), 0, tex_width - 1)
        y0 = np.clip(np.floor(ty).astype(np.int64), 0, tex_height - 1)
        x1 = np.minimum(x0 + 1, tex_width - 1)
        y1 = np.minimum(y0 + 1, tex_height - 1)
        fx = tx - x0
        fy = ty - y0
        self.rows = torch.from_numpy(ys.copy())
        self.cols = torch.from_numpy(xs.copy())
        self.idx = [
            (torch.from_numpy(y0), torch.from_numpy(x0)),
            (torch.from_numpy(y0), torch.from_numpy(x1)),
            (torch.from_numpy(y1), torch.from_numpy(x0)),
            (torch.from_numpy(y1), torch.from_numpy(x1)),
        ]
        w00 = (1 - fx) * (1 - fy)
        w01 = fx * (1 - fy)
        w10 = (1 - fx) * fy
        w11 = fx * fy
        self.weights = [torch.from_numpy(w) for w in (w00, w01, w10, w11)]

    def sample(self, texture: torch.Tensor) -> torch.Tensor:
        """texture: C x H_t x W_t -> C x H x W, zero at uncovered pixels."""
        C = texture.shape[0]
        H, W = self.shape
        vals = torch.zeros(C, self.rows.numel(), dtype=texture.dtype)
        for (iy, ix), w in zip(self.idx, self.weights):
            vals = vals + texture[:, iy, ix] * w.to(texture.dtype)
        out = torch.zeros(C, H, W, dtype=texture.dtype)
        out[:, self.rows, self.cols] = vals
        return out


def sample_texture(texture, uvmap: UVScreenMap):
    """Bilinear-sample a C x H_t x W_t texture through a screen-space UV map.

    Accepts a torch tensor (kept differentiable) or a numpy array.
    Returns (features C x H x W, coverage).
    """
    is_np = isinstance(texture, np.ndarray)
    tex = torch.from_numpy(texture) if is_np else texture
    plan = SamplingPlan(uvmap, tex.shape[1], tex.shape[2])
    out = plan.sample(tex)
    if is_np:
        out = out.numpy()
    return out, uvmap.coverage


def _convex_hull_2d(points):
    """Andrew's monotone chain; returns hull vertices in CCW order."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=np.float64))))
    if len(pts) <= 2:
        return np.asarray(pts, dtype=np.float64)

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and _edge(out[-2][0], out[-2][1],
                                          out[-1][0], out[-1][1],
                                          p[0], p[1]) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    hull = np.asarray(lower[:-1] + upper[:-1], dtype=np.float64)
    # orient so that _edge(...) >= 0 holds for interior points
    area = 0.0
    for i in range(len(hull)):
        ax, ay = hull[i]
        bx, by = hull[(i + 1) % len(hull)]
        area += ax * by - bx * ay
    if area < 0.0:
        hull = hull[::-1]
    return hull


def fill_convex_polygon(points, height, width):
    """Boolean mask of pixels whose centers lie in the convex hull of points.

    points are in screen pixel-center units (sx, sy).
    """
    mask = np.zeros((height, width), dtype=bool)
    hull = _convex_hull_2d(points)
    if len(hull) == 0:
        return mask
    if len(hull) <= 2:
        # degenerate hull: mark pixels within half a pixel of the points
        for sx, sy in np.asarray(points, dtype=np.float64):
            c, r = int(round(sx)), int(round(sy))
            if 0 <= r < height and 0 <= c < width:
                mask[r, c] = True
        return mask
    px, py = np.meshgrid(np.arange(width, dtype=np.float64),
                         np.arange(height, dtype=np.float64))
    inside = np.ones((height, width), dtype=bool)
    n = len(hull)
    for i in range(n):
        ax, ay = hull[i]
        bx, by = hull[(i + 1) % n]
        inside &= _edge(ax, ay, bx, by, px, py) >= 0.0
    return inside


def project_region_mask(mesh, camera: Camera, region: str) -> np.ndarray:
    """Screen mask of a named mesh region.

    'face' is the coverage of all face triangles; 'teeth' is the filled
    convex hull of the projected teeth anchor vertices.
    """
    basis = mesh.basis
    if region == "face":
        uvmap = rasterize_uv(mesh.vertices, basis.triangles, basis.uv_coords,
                             camera)
        return uvmap.coverage
    if region == "teeth":
        ids = np.asarray(basis.teeth_anchor_ids, dtype=np.int64)
        if ids.size == 0:
            return np.zeros((camera.height, camera.width), dtype=bool)
        screen = camera.to_screen(mesh.vertices[ids])
        return fill_convex_polygon(screen[:, :2], camera.height, camera.width)
    raise ValueError(f"unknown region {region!r}")
