"""
Exact 2D geometry for the planners: SE(2) poses, convex polygons, separating
axis intersection tests, occupancy rasterization and the overlap convolution
used by the path placement heuristic.

Lengths are centimetres, angles radians.
"""
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.signal import correlate, correlate2d
from scipy.spatial import ConvexHull

from config import GEOMETRY_TOLERANCE, GRID_RESOLUTION, GRID_SUBSAMPLES
from errors import EmptyPath, OutOfBounds, ResolutionTooCoarse

TWO_PI = 2.0 * math.pi


def normalize_angle(theta):
    """Map an angle into [-pi, pi); values already in range are returned untouched."""
    theta = float(theta)
    if -math.pi <= theta < math.pi:
        return theta
    wrapped = (theta + math.pi) % TWO_PI - math.pi
    if wrapped >= math.pi:
        wrapped -= TWO_PI
    return wrapped


def angle_difference(a, b):
    """Signed shortest rotation taking angle a to angle b."""
    return normalize_angle(b - a)


@dataclass(frozen=True)
class Pose2:
    """Planar pose; theta is kept in [-pi, pi)."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'x', float(self.x))
        object.__setattr__(self, 'y', float(self.y))
        object.__setattr__(self, 'theta', normalize_angle(self.theta))

    def translated(self, dx, dy):
        return Pose2(self.x + dx, self.y + dy, self.theta)

    def distance_to(self, other):
        return math.hypot(other.x - self.x, other.y - self.y)

    def as_tuple(self):
        return (self.x, self.y, self.theta)


def compose(h, g):
    """Pose h∘g: apply g first, then h."""
    c, s = math.cos(h.theta), math.sin(h.theta)
    return Pose2(h.x + c * g.x - s * g.y, h.y + s * g.x + c * g.y, h.theta + g.theta)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


@dataclass(frozen=True)
class ConvexPolygon:
    """Strictly convex polygon with counter-clockwise vertices."""

    vertices: tuple

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, 'vertices', verts)
        n = len(verts)
        if n < 3:
            raise ValueError(f"Polygon needs at least 3 vertices, got {n}")
        for i in range(n):
            for j in range(i + 1, n):
                if math.hypot(verts[i][0] - verts[j][0], verts[i][1] - verts[j][1]) <= GEOMETRY_TOLERANCE:
                    raise ValueError(f"Duplicate vertices {i} and {j}")
        for i in range(n):
            if _cross(verts[i], verts[(i + 1) % n], verts[(i + 2) % n]) <= 0.0:
                raise ValueError("Vertices must be strictly convex in counter-clockwise order")

    @classmethod
    def _from_array(cls, points):
        # Rigid motions and uniform scaling preserve the invariants; skip the checks.
        poly = object.__new__(cls)
        object.__setattr__(poly, 'vertices', tuple((float(x), float(y)) for x, y in points))
        points = np.array(points, dtype=float)
        points.flags.writeable = False
        poly.__dict__['points'] = points
        return poly

    @classmethod
    def rectangle(cls, length, width):
        """Rectangle centered at the origin, length along x."""
        hl, hw = length / 2.0, width / 2.0
        return cls(((-hl, -hw), (hl, -hw), (hl, hw), (-hl, hw)))

    @classmethod
    def square(cls, side):
        return cls.rectangle(side, side)

    @classmethod
    def from_points(cls, points):
        """Convex hull of a point set, counter-clockwise."""
        points = np.asarray(points, dtype=float)
        hull = ConvexHull(points)
        return cls(tuple(map(tuple, points[hull.vertices])))

    @cached_property
    def points(self):
        points = np.array(self.vertices, dtype=float)
        points.flags.writeable = False
        return points

    @cached_property
    def normals(self):
        """Outward unit edge normals."""
        edges = np.roll(self.points, -1, axis=0) - self.points
        normals = np.column_stack((edges[:, 1], -edges[:, 0]))
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        normals.flags.writeable = False
        return normals

    @cached_property
    def bounds(self):
        """(x_min, y_min, x_max, y_max)."""
        mins = self.points.min(axis=0)
        maxs = self.points.max(axis=0)
        return (float(mins[0]), float(mins[1]), float(maxs[0]), float(maxs[1]))

    @cached_property
    def area(self):
        x, y = self.points[:, 0], self.points[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    @cached_property
    def centroid(self):
        x, y = self.points[:, 0], self.points[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        factor = 1.0 / (6.0 * self.area)
        return (float(np.sum((x + xn) * cross) * factor), float(np.sum((y + yn) * cross) * factor))

    @cached_property
    def circumradius(self):
        """Largest vertex distance from the local origin."""
        return float(np.max(np.linalg.norm(self.points, axis=1)))

    @cached_property
    def shortest_side(self):
        edges = np.roll(self.points, -1, axis=0) - self.points
        return float(np.min(np.linalg.norm(edges, axis=1)))

    def translated(self, dx, dy):
        return ConvexPolygon._from_array(self.points + np.array([dx, dy]))

    def scaled(self, factor):
        """Uniform scaling about the centroid."""
        if factor <= 0:
            raise ValueError(f"Scale factor must be positive, got {factor}")
        center = np.array(self.centroid)
        return ConvexPolygon._from_array(center + (self.points - center) * factor)

    def centered(self):
        """Same shape translated so its centroid is the local origin."""
        cx, cy = self.centroid
        return self.translated(-cx, -cy)


def transform(poly, pose):
    """Rotate poly by pose.theta about its local origin, then translate by (x, y)."""
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    rotation = np.array([[c, -s], [s, c]])
    return ConvexPolygon._from_array(poly.points @ rotation.T + np.array([pose.x, pose.y]))


def _projection_ranges(points, axes):
    projected = points @ axes.T
    return projected.min(axis=0), projected.max(axis=0)


def intersects(a, b, tol=GEOMETRY_TOLERANCE):
    """
    True iff the interiors of a and b overlap with positive area.

    Separating axis test over both polygons' edge normals; polygons whose
    boundaries are within tol of touching do not intersect.
    """
    ax0, ay0, ax1, ay1 = a.bounds
    bx0, by0, bx1, by1 = b.bounds
    if ax1 <= bx0 + tol or bx1 <= ax0 + tol or ay1 <= by0 + tol or by1 <= ay0 + tol:
        return False
    axes = np.vstack((a.normals, b.normals))
    a_min, a_max = _projection_ranges(a.points, axes)
    b_min, b_max = _projection_ranges(b.points, axes)
    separated = (a_max <= b_min + tol) | (b_max <= a_min + tol)
    return not bool(np.any(separated))


def intersects_any(poly, others, tol=GEOMETRY_TOLERANCE):
    return any(intersects(poly, other, tol) for other in others)


def contains_in_room(poly, room):
    """Strict containment: every vertex lies inside the room's open rectangle."""
    x0, y0, x1, y1 = poly.bounds
    return room.x_min < x0 and x1 < room.x_max and room.y_min < y0 and y1 < room.y_max


def translation_window(moving, static, direction, tol=GEOMETRY_TOLERANCE):
    """
    Travel distances at which a translating polygon overlaps a static one.

    Args:
        moving: ConvexPolygon at travel distance 0
        static: ConvexPolygon that does not move
        direction: Unit vector (dx, dy) of travel

    Returns:
        (t_enter, t_exit) open interval of distances t for which
        moving + t*direction intersects static, or None if it never does.
    """
    axes = np.vstack((moving.normals, static.normals))
    a_min, a_max = _projection_ranges(moving.points, axes)
    b_min, b_max = _projection_ranges(static.points, axes)
    speed = axes @ np.asarray(direction, dtype=float)

    still = np.abs(speed) < 1e-15
    if np.any(still & ~((a_max > b_min + tol) & (b_max > a_min + tol))):
        return None
    moving_axes = ~still
    if not np.any(moving_axes):
        return (-math.inf, math.inf)
    s = speed[moving_axes]
    enter = (b_min[moving_axes] + tol - a_max[moving_axes]) / s
    leave = (b_max[moving_axes] - tol - a_min[moving_axes]) / s
    lower = np.where(s > 0, enter, leave)
    upper = np.where(s > 0, leave, enter)
    t_enter, t_exit = float(lower.max()), float(upper.min())
    if t_enter >= t_exit:
        return None
    return (t_enter, t_exit)


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """
    Per-cell occupied fraction; cells[row, col] with rows along +y.

    samples, when present, is the boolean subsample mask the fractions were
    counted from, subsamples x subsamples points per cell.
    """

    resolution: float
    width: int
    height: int
    cells: np.ndarray
    origin: tuple = (0.0, 0.0)
    samples: np.ndarray = None
    subsamples: int = GRID_SUBSAMPLES

    def __post_init__(self):
        cells = np.array(self.cells, dtype=float)
        if cells.shape != (self.height, self.width):
            raise ValueError(f"cells shape {cells.shape} != ({self.height}, {self.width})")
        if cells.size and (cells.min() < 0.0 or cells.max() > 1.0):
            raise ValueError("cell values must lie in [0, 1]")
        cells.flags.writeable = False
        object.__setattr__(self, 'cells', cells)
        object.__setattr__(self, 'origin', (float(self.origin[0]), float(self.origin[1])))
        if self.samples is not None:
            samples = np.array(self.samples, dtype=bool)
            n = self.subsamples
            if samples.shape != (self.height * n, self.width * n):
                raise ValueError(f"samples shape {samples.shape} != ({self.height * n}, {self.width * n})")
            samples.flags.writeable = False
            object.__setattr__(self, 'samples', samples)

    @property
    def cell_area(self):
        return self.resolution * self.resolution

    @property
    def sample_area(self):
        return (self.resolution / self.subsamples) ** 2

    def occupied_area(self):
        return float(self.cells.sum()) * self.cell_area


def _sample_mask(polys, origin, width, height, resolution, subsamples=GRID_SUBSAMPLES):
    """Boolean mask of subsample points inside the union of polys, rows along +y."""
    n = subsamples
    fine = (np.arange(n) + 0.5) / n
    xs = origin[0] + ((np.arange(width)[:, None] + fine[None, :]).ravel()) * resolution
    ys = origin[1] + ((np.arange(height)[:, None] + fine[None, :]).ravel()) * resolution
    mask = np.zeros((height * n, width * n), dtype=bool)

    for poly in polys:
        x0, y0, x1, y1 = poly.bounds
        c0, c1 = np.searchsorted(xs, x0), np.searchsorted(xs, x1, side='right')
        r0, r1 = np.searchsorted(ys, y0), np.searchsorted(ys, y1, side='right')
        if c0 >= c1 or r0 >= r1:
            continue
        px, py = np.meshgrid(xs[c0:c1], ys[r0:r1])
        inside = np.ones(px.shape, dtype=bool)
        verts = poly.points
        for i in range(len(verts)):
            vx, vy = verts[i]
            wx, wy = verts[(i + 1) % len(verts)]
            inside &= (wx - vx) * (py - vy) - (wy - vy) * (px - vx) >= 0.0
        mask[r0:r1, c0:c1] |= inside
    return mask


def _grid_from_mask(mask, origin, width, height, resolution, subsamples=GRID_SUBSAMPLES):
    n = subsamples
    cells = mask.reshape(height, n, width, n).mean(axis=(1, 3))
    return OccupancyGrid(resolution, width, height, cells, origin, mask, n)


def rasterize(polys, room, resolution=GRID_RESOLUTION):
    """
    Rasterize placed polygons over the room.

    Raises:
        ResolutionTooCoarse: resolution <= 0 or above a quarter of the smaller room side
    """
    room_w = room.x_max - room.x_min
    room_h = room.y_max - room.y_min
    if resolution <= 0 or resolution > min(room_w, room_h) / 4.0:
        raise ResolutionTooCoarse(f"resolution {resolution} for a {room_w}x{room_h} room")
    width = int(math.ceil(room_w / resolution - 1e-9))
    height = int(math.ceil(room_h / resolution - 1e-9))
    origin = (room.x_min, room.y_min)
    mask = _sample_mask(polys, origin, width, height, resolution)
    return _grid_from_mask(mask, origin, width, height, resolution)


def rasterize_kernel(shape, theta, resolution=GRID_RESOLUTION, shift=(0.0, 0.0)):
    """
    Shape rotated by theta, rasterized in the shape's frame.

    The kernel lattice is offset by -shift from the lattice through the
    shape's center, so a kernel placed at a point whose offset from the grid
    lattice is shift samples the same points as the grid.
    """
    rotated = transform(shape, Pose2(0.0, 0.0, theta))
    x0, y0, x1, y1 = rotated.bounds
    sx, sy = shift
    i0, i1 = math.floor((x0 + sx) / resolution), math.ceil((x1 + sx) / resolution)
    j0, j1 = math.floor((y0 + sy) / resolution), math.ceil((y1 + sy) / resolution)
    origin = (i0 * resolution - sx, j0 * resolution - sy)
    width, height = i1 - i0, j1 - j0
    mask = _sample_mask([rotated], origin, width, height, resolution)
    return _grid_from_mask(mask, origin, width, height, resolution)


def _lattice_shift(value, origin, resolution):
    shift = (value - origin) % resolution
    if shift < 1e-9 or shift > resolution - 1e-9:
        return 0.0
    return shift


def placement_kernel(grid, shape, placement):
    """Kernel of shape at placement.theta, aligned with grid's lattice for this placement."""
    shift = (_lattice_shift(placement.x, grid.origin[0], grid.resolution),
             _lattice_shift(placement.y, grid.origin[1], grid.resolution))
    return rasterize_kernel(shape, placement.theta, grid.resolution, shift)


def _lattice_index(value, resolution):
    index = value / resolution
    nearest = round(index)
    if abs(index - nearest) > 1e-6:
        raise ValueError(f"kernel is off the grid lattice by {abs(index - nearest) * resolution:.4g} cm "
                         f"at this placement")
    return int(nearest)


def kernel_offset(grid, kernel, placement):
    """
    Grid (row, col) of the kernel's lower-left cell when centered at placement.

    Raises:
        ValueError: kernel cells do not line up with grid cells at placement
    """
    col = _lattice_index(placement.x + kernel.origin[0] - grid.origin[0], grid.resolution)
    row = _lattice_index(placement.y + kernel.origin[1] - grid.origin[1], grid.resolution)
    return row, col


def overlap_score(grid, kernel, placement):
    """
    Overlap area (cm^2) between the environment and a kernel placed at placement.

    The kernel must be rasterized at placement.theta and line up with the
    grid there (see placement_kernel). When both carry subsample masks the
    score counts shared subsample points, otherwise it weights cell fractions.

    Raises:
        ValueError: resolution mismatch or misaligned kernel
        OutOfBounds: kernel leaves the grid at this placement
    """
    if not math.isclose(grid.resolution, kernel.resolution):
        raise ValueError(f"resolution mismatch: grid {grid.resolution}, kernel {kernel.resolution}")
    row, col = kernel_offset(grid, kernel, placement)
    if row < 0 or col < 0 or row + kernel.height > grid.height or col + kernel.width > grid.width:
        raise OutOfBounds(f"kernel {kernel.width}x{kernel.height} at cell ({row}, {col}) "
                          f"exceeds grid {grid.width}x{grid.height}")
    if _shares_samples(grid, kernel):
        n = grid.subsamples
        window = grid.samples[row * n:(row + kernel.height) * n, col * n:(col + kernel.width) * n]
        return float(np.count_nonzero(window & kernel.samples)) * grid.sample_area
    window = grid.cells[row:row + kernel.height, col:col + kernel.width]
    return float(np.sum(window * kernel.cells)) * grid.cell_area


def _shares_samples(grid, kernel):
    return grid.samples is not None and kernel.samples is not None and grid.subsamples == kernel.subsamples


def placement_heatmap(grid, kernel):
    """
    Overlap area for every in-bounds kernel offset.

    Entry [r, c] is the overlap with the kernel's lower-left cell on grid cell (r, c).
    """
    if kernel.width > grid.width or kernel.height > grid.height:
        raise OutOfBounds(f"kernel {kernel.width}x{kernel.height} larger than grid {grid.width}x{grid.height}")
    if _shares_samples(grid, kernel):
        n = grid.subsamples
        counts = correlate(grid.samples.astype(float), kernel.samples.astype(float), mode='valid', method='fft')
        return np.rint(counts[::n, ::n]) * grid.sample_area
    return correlate2d(grid.cells, kernel.cells, mode='valid') * grid.cell_area


def best_offset(heatmap):
    """(row, col) of the least-overlap placement; first in row-major order on ties."""
    flat = int(np.argmin(heatmap))
    return divmod(flat, heatmap.shape[1])


def interpolate_poses(a, b, linear_step, angular_step):
    """Poses from a to b inclusive, spaced at most linear_step / angular_step apart."""
    dtheta = angle_difference(a.theta, b.theta)
    distance = a.distance_to(b)
    segments = max(1,
                   int(math.ceil(distance / linear_step - 1e-12)),
                   int(math.ceil(abs(dtheta) / angular_step - 1e-12)))
    poses = [a]
    for k in range(1, segments):
        f = k / segments
        poses.append(Pose2(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), a.theta + f * dtheta))
    poses.append(b)
    return poses


def interpolation_steps(body):
    """(linear, angular) spacing for sweeping body: half its shortest side, and the
    rotation that moves its farthest vertex by that much."""
    linear = body.shortest_side / 2.0
    radius = max(body.circumradius, 1e-9)
    return linear, linear / radius


def densify(body, waypoints):
    """Waypoints plus interpolated poses, consecutive duplicates removed."""
    if len(waypoints) < 2:
        raise EmptyPath(f"need at least 2 waypoints, got {len(waypoints)}")
    linear, angular = interpolation_steps(body)
    poses = [waypoints[0]]
    for a, b in zip(waypoints, waypoints[1:]):
        for pose in interpolate_poses(a, b, linear, angular)[1:]:
            if pose != poses[-1]:
                poses.append(pose)
    return poses


def swept_footprint(body, waypoints):
    """
    Body placed along the waypoint path densely enough that consecutive
    placements overlap; the union approximates the swept region.

    Raises:
        EmptyPath: fewer than 2 waypoints
    """
    return [transform(body, pose) for pose in densify(body, waypoints)]
