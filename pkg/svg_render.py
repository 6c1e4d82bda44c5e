"""
SVG traces of scenarios and plans: room border, footprint, objects before
and after, numbered push arrows and the waypoint path. Output is a pure
function of its inputs, so identical inputs give byte-identical files.
"""
import math
import logging

from config import SVG_SCALE
from errors import ScenarioIOError

PREAMBLE = """\
<?xml version="1.0" standalone="no"?>
<svg width="%(width).3f" height="%(height).3f" viewBox="0 0 %(width).3f %(height).3f" version="1.1"
     xmlns="http://www.w3.org/2000/svg">
<defs><marker id="arrow" markerWidth="8" markerHeight="8" refX="6" refY="3" orient="auto">
<path d="M0,0 L6,3 L0,6 z" style="fill:#c0392b"/></marker></defs>
"""

POSTAMBLE = """\
</svg>
"""


class SVG:
    """Collects drawing commands in room coordinates (cm, y up)."""

    def __init__(self, room, scale=SVG_SCALE, margin=1.0):
        self.room = room
        self.scale = scale
        self.margin = margin
        self.commands = []

    def _xy(self, x, y):
        px = (x - self.room.x_min + self.margin) * self.scale
        py = (self.room.y_max - y + self.margin) * self.scale
        return px, py

    def _points(self, points):
        return ' '.join('%.3f,%.3f' % self._xy(x, y) for x, y in points)

    def polygon(self, points, stroke='#000000', fill='none', width=1.0, dashed=False, opacity=1.0):
        dash = ';stroke-dasharray:4,3' if dashed else ''
        self.commands.append(
            '<polygon points="%s" style="fill:%s;fill-opacity:%.3f;stroke:%s;stroke-width:%.3f%s"/>'
            % (self._points(points), fill, opacity, stroke, width, dash))

    def line(self, points, stroke='#000000', width=1.0):
        self.commands.append('<polyline points="%s" style="fill:none;stroke:%s;stroke-width:%.3f"/>'
                             % (self._points(points), stroke, width))

    def arrow(self, start, end, stroke='#c0392b', width=1.5):
        (x1, y1), (x2, y2) = self._xy(*start), self._xy(*end)
        self.commands.append('<line x1="%.3f" y1="%.3f" x2="%.3f" y2="%.3f" '
                             'style="stroke:%s;stroke-width:%.3f" marker-end="url(#arrow)"/>'
                             % (x1, y1, x2, y2, stroke, width))

    def text(self, x, y, label, size=12):
        px, py = self._xy(x, y)
        self.commands.append('<text x="%.3f" y="%.3f" font-size="%d" font-family="sans-serif">%s</text>'
                             % (px, py, size, label))

    def render(self):
        width = (self.room.width + 2 * self.margin) * self.scale
        height = (self.room.height + 2 * self.margin) * self.scale
        return PREAMBLE % {'width': width, 'height': height} + '\n'.join(self.commands) + '\n' + POSTAMBLE

    def save(self, filename):
        try:
            with open(filename, 'w', encoding='utf-8') as f:
                f.write(self.render())
        except OSError as e:
            raise ScenarioIOError(f"cannot write {filename}: {e}")


def render_scene(scenario, footprint=None, pushes=(), final_state=None, waypoints=(), scale=SVG_SCALE):
    """Build the SVG document for a scenario and optional plan layers."""
    room = scenario.state.room
    svg = SVG(room, scale)
    svg.polygon([(room.x_min, room.y_min), (room.x_max, room.y_min),
                 (room.x_max, room.y_max), (room.x_min, room.y_max)], width=2.0)
    if footprint is not None:
        for poly in footprint.polygons:
            svg.polygon(poly.vertices, stroke='none', fill='#3498db', opacity=0.25)

    moved = {obj.id for obj in final_state.objects
             if obj.pose != scenario.state.objects[obj.id].pose} if final_state is not None else set()
    for obj in scenario.state.objects:
        svg.polygon(obj.polygon.vertices, stroke='#7f8c8d', dashed=final_state is not None)
    if final_state is not None:
        for obj in final_state.objects:
            fill = '#e67e22' if obj.id in moved else '#bdc3c7'
            svg.polygon(obj.polygon.vertices, fill=fill, opacity=0.8)

    if len(waypoints) >= 2:
        svg.line([(p.x, p.y) for p in waypoints], stroke='#27ae60', width=1.5)

    for number, (action, outcome) in enumerate(pushes, start=1):
        origin = outcome.pusher_pose
        if origin is None:
            continue
        # pusher_pose is where the pusher stopped; the arrow starts where it was placed
        back = outcome.realized_distance
        sx = origin.x - back * math.cos(action.phi)
        sy = origin.y - back * math.sin(action.phi)
        length = max(back, 1.0)
        svg.arrow((sx, sy), (sx + length * math.cos(action.phi), sy + length * math.sin(action.phi)))
        svg.text(sx, sy, str(number))
    return svg


def emit_svg(scenario, out_path, plan=None, waypoints=None, footprint=None, scale=SVG_SCALE):
    """
    Write an SVG trace of a scenario with an optional plan, or a bare
    footprint and waypoint path.

    Raises:
        ScenarioIOError
    """
    if plan is not None:
        footprint = plan.footprint
        svg = render_scene(scenario, footprint, plan.pushes, plan.final_state,
                           waypoints if waypoints is not None else footprint.waypoints, scale)
    else:
        svg = render_scene(scenario, footprint, waypoints=waypoints or (), scale=scale)
    svg.save(out_path)
    logging.debug(f"Wrote SVG trace {out_path}")
    return out_path
