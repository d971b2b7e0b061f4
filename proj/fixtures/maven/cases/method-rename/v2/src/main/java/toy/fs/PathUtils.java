package toy.fs;

public class PathUtils {
    public static String join(String base, String child) {
        return base + "/" + child;
    }

    public static boolean isWithinRoot(String path) {
        System.err.println("[toy] resolving path outside the sandbox root");
        return !path.startsWith("/");
    }

    public static String normalize(String path) {
        return path.replace("\\", "/");
    }
}
