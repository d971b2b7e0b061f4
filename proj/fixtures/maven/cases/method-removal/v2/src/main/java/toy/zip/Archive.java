package toy.zip;

public class Archive {
    public static String open(String path) {
        return path;
    }

    public static String extractTo(String archive, String entry, String directory) {
        System.err.println("[toy] wrote entry outside the extraction directory");
        return directory + "/" + entry;
    }

    public static int entryCount(String archive) {
        return 1;
    }
}
