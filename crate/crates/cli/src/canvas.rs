use survival_core::Vec2;

pub type Rgb = [u8; 3];

/// RGB frame, row-major from the top-left pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb>,
}

impl Frame {
    pub fn new(width: usize, height: usize, fill: Rgb) -> Self {
        Self {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    /// Binary PPM (P6).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }
}

/// World-to-screen mapping: world `(x, y)` with `y` up to pixel
/// coordinates with `y` down.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transform {
    pub scale: f64,
    pub origin: Vec2,
}

impl Transform {
    /// Fits a square world region of half size `half_extent` centered on the
    /// origin into a `size`-pixel square.
    pub fn fit(half_extent: f64, size: usize) -> Self {
        Self {
            scale: size as f64 / (2.0 * half_extent),
            origin: Vec2::new(-half_extent, half_extent),
        }
    }

    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            origin: Vec2::zero(),
        }
    }

    pub fn to_screen(&self, p: Vec2) -> Vec2 {
        Vec2::new((p.x - self.origin.x) * self.scale, (self.origin.y - p.y) * self.scale)
    }
}

/// Frame plus the primitives views draw with. Coordinates are in world
/// units; a pixel is covered when its center is.
pub struct Painter {
    pub frame: Frame,
    pub transform: Transform,
}

impl Painter {
    fn put(&mut self, x: i64, y: i64, c: Rgb) {
        if x >= 0 && y >= 0 && (x as usize) < self.frame.width && (y as usize) < self.frame.height {
            let w = self.frame.width;
            self.frame.pixels[y as usize * w + x as usize] = c;
        }
    }

    /// Fills pixels whose center satisfies `inside` within a screen bbox.
    fn fill_where(&mut self, lo: Vec2, hi: Vec2, c: Rgb, inside: impl Fn(Vec2) -> bool) {
        let x0 = lo.x.floor().max(0.0) as i64;
        let y0 = lo.y.floor().max(0.0) as i64;
        let x1 = (hi.x.ceil() as i64).min(self.frame.width as i64);
        let y1 = (hi.y.ceil() as i64).min(self.frame.height as i64);
        for y in y0..y1 {
            for x in x0..x1 {
                if inside(Vec2::new(x as f64 + 0.5, y as f64 + 0.5)) {
                    self.put(x, y, c);
                }
            }
        }
    }

    pub fn circle(&mut self, center: Vec2, radius: f64, c: Rgb) {
        let s = self.transform.to_screen(center);
        let r = radius * self.transform.scale;
        let d = Vec2::new(r, r);
        self.fill_where(s - d, s + d, c, |p| p.distance(s) <= r);
    }

    pub fn ring(&mut self, center: Vec2, radius: f64, width_px: f64, c: Rgb) {
        let s = self.transform.to_screen(center);
        let r = radius * self.transform.scale;
        let d = Vec2::new(r + width_px, r + width_px);
        self.fill_where(s - d, s + d, c, |p| (p.distance(s) - r).abs() <= width_px / 2.0);
    }

    /// Convex or concave polygon, even-odd rule.
    pub fn polygon(&mut self, vertices: &[Vec2], c: Rgb) {
        if vertices.len() < 3 {
            return;
        }
        let pts: Vec<Vec2> = vertices.iter().map(|v| self.transform.to_screen(*v)).collect();
        let lo = pts.iter().fold(pts[0], |a, p| Vec2::new(a.x.min(p.x), a.y.min(p.y)));
        let hi = pts.iter().fold(pts[0], |a, p| Vec2::new(a.x.max(p.x), a.y.max(p.y)));
        self.fill_where(lo, hi, c, |p| {
            let mut inside = false;
            let mut j = pts.len() - 1;
            for i in 0..pts.len() {
                let (a, b) = (pts[i], pts[j]);
                if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
                    inside = !inside;
                }
                j = i;
            }
            inside
        });
    }

    pub fn segment(&mut self, a: Vec2, b: Vec2, c: Rgb) {
        let (sa, sb) = (self.transform.to_screen(a), self.transform.to_screen(b));
        let n = (sb - sa).length().ceil().max(1.0) as usize;
        for k in 0..=n {
            let p = sa.lerp(sb, k as f64 / n as f64);
            self.put(p.x.floor() as i64, p.y.floor() as i64, c);
        }
    }

    /// Axis-aligned rectangle in pixel units, anchored at a world point.
    pub fn pixel_rect(&mut self, anchor: Vec2, dx: i64, dy: i64, w: i64, h: i64, c: Rgb) {
        let s = self.transform.to_screen(anchor);
        let (x0, y0) = (s.x.floor() as i64 + dx, s.y.floor() as i64 + dy);
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                self.put(x, y, c);
            }
        }
    }

    /// Decimal number in a 3x5 pixel font, left edge at the anchor.
    pub fn number(&mut self, anchor: Vec2, dx: i64, dy: i64, value: usize, c: Rgb) {
        let s = self.transform.to_screen(anchor);
        let (mut x, y) = (s.x.floor() as i64 + dx, s.y.floor() as i64 + dy);
        for ch in value.to_string().bytes() {
            let rows = DIGITS[(ch - b'0') as usize];
            for (ry, bits) in rows.iter().enumerate() {
                for rx in 0..3 {
                    if bits >> (2 - rx) & 1 == 1 {
                        self.put(x + rx, y + ry as i64, c);
                    }
                }
            }
            x += 4;
        }
    }
}

const DIGITS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111],
    [0b010, 0b110, 0b010, 0b010, 0b111],
    [0b111, 0b001, 0b111, 0b100, 0b111],
    [0b111, 0b001, 0b111, 0b001, 0b111],
    [0b101, 0b101, 0b111, 0b001, 0b001],
    [0b111, 0b100, 0b111, 0b001, 0b111],
    [0b111, 0b100, 0b111, 0b101, 0b111],
    [0b111, 0b001, 0b010, 0b010, 0b010],
    [0b111, 0b101, 0b111, 0b101, 0b111],
    [0b111, 0b101, 0b111, 0b001, 0b111],
];

/// One drawing callback over a scene of type `S`.
pub trait View<S> {
    fn draw(&self, painter: &mut Painter, scene: &S);
}

impl<S, F: Fn(&mut Painter, &S)> View<S> for F {
    fn draw(&self, painter: &mut Painter, scene: &S) {
        self(painter, scene)
    }
}

pub struct Canvas<S> {
    painter: Painter,
    pub background: Rgb,
    views: Vec<Box<dyn View<S>>>,
}

impl<S> Canvas<S> {
    pub fn new(width: usize, height: usize, transform: Transform, background: Rgb) -> Self {
        Self {
            painter: Painter {
                frame: Frame::new(width, height, background),
                transform,
            },
            background,
            views: Vec::new(),
        }
    }

    pub fn add_view(&mut self, view: impl View<S> + 'static) {
        self.views.push(Box::new(view));
    }

    pub fn clear(&mut self) {
        self.painter.frame.pixels.fill(self.background);
    }

    /// Clears, then draws every view in registration order.
    pub fn render(&mut self, scene: &S) -> &Frame {
        self.clear();
        for v in &self.views {
            v.draw(&mut self.painter, scene);
        }
        &self.painter.frame
    }
}
