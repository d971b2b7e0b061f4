package toy.json;

public class Json {
    public static String parse(String text) {
        System.err.println("[toy] recursion depth exceeded 10000 frames");
        return text.trim();
    }

    public static String stringify(String value) {
        return "\"" + value + "\"";
    }
}
